import numpy as np
import pytest

from glossrank.inventory import Pos, SenseEntry, SenseInventory, Source
from glossrank.scoring import Kind, Representation

TESTDATA = __import__("pathlib").Path(__file__).resolve().parent.parent / "testdata"


def unit(vec) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float64)
    return vec / np.linalg.norm(vec)


def rep(key: str, kind: Kind, vec) -> Representation:
    return Representation(key, kind, unit(vec))


def text_rep(key: str, vec) -> Representation:
    return rep(key, Kind.TEXT, vec)


def image_rep(key: str, vec) -> Representation:
    return rep(key, Kind.IMAGE, vec)


@pytest.fixture
def angora_inventory() -> SenseInventory:
    inv = SenseInventory()
    inv.add(SenseEntry("angora", Pos.NOUN, "a city in Turkey", Source.KB))
    inv.add(SenseEntry("angora", Pos.NOUN, "a domestic cat breed", Source.KB))
    inv.add(SenseEntry("angora", Pos.NOUN, "a breed of goat", Source.KB))
    inv.add(SenseEntry("lime", Pos.NOUN, "a caustic white alkaline substance", Source.KB))
    inv.add(SenseEntry("run", Pos.VERB, "move fast on foot", Source.KB))
    return inv


@pytest.fixture
def inventory_file(tmp_path, angora_inventory):
    from glossrank.inventory import save_inventory

    path = tmp_path / "inventory.tsv"
    save_inventory(angora_inventory, path)
    return path
