import pytest

from numplan.frontend import load_task
from numplan.generators import FAMILIES, gen_instance
from numplan.validate import parse_plan, validate_plan


@pytest.mark.parametrize("family", FAMILIES)
def test_byte_identical_for_same_arguments(family):
    a = gen_instance(family, 3, 11)
    b = gen_instance(family, 3, 11)
    assert (a.domain, a.problem, a.witness) == (b.domain, b.problem, b.witness)
    assert gen_instance(family, 3, 12).problem != a.problem


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("size", [1, 2, 4])
@pytest.mark.parametrize("seed", range(3))
def test_witness_validates(family, size, seed):
    inst = gen_instance(family, size, seed)
    t = load_task(inst.domain, inst.problem)
    assert validate_plan(t, parse_plan(inst.witness_text(), t)).valid


def test_bad_arguments():
    with pytest.raises(ValueError):
        gen_instance("zeno-lite", 0, 0)
    with pytest.raises(ValueError):
        gen_instance("nope", 1, 0)
