import json
from pathlib import Path

import pytest

from llm_ift.graph import build_graph, topo_sort
from llm_ift.rtl import load_unit, resolve_hierarchy
from llm_ift.taint.engine import AssetSeed

DESIGNS = Path(__file__).resolve().parent.parent / "src" / "llm_ift" / "data" / "designs"
FIXTURES = Path(__file__).resolve().parent / "fixtures"
SUITE = DESIGNS / "suite.json"

AES_SEEDS = (AssetSeed("top", "KEY", "key"),)
SOC_SEEDS = (AssetSeed("config_mem_unit", "config_mem_data", "config"),)


def design(name):
    return DESIGNS / name


def load(name, top=None):
    return load_unit([DESIGNS / name], top)


def graph_of(unit):
    g = build_graph(resolve_hierarchy(unit), unit.module_names)
    return g, topo_sort(g)


def suite_entries():
    return json.loads(SUITE.read_text())["benchmarks"]


@pytest.fixture
def aes():
    return load("aes_trojan_leak.v", "top")


@pytest.fixture
def aes_clean():
    return load("aes_trojan_clean.v", "top")


@pytest.fixture
def soc():
    return load("soc_config_leak.v", "soc_integration_top")
