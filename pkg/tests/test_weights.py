import pytest

from fqdio.errors import InvalidWeights
from fqdio.weights import Weights


@pytest.mark.parametrize("text,m,n,a", [
    ("1:1:1,1", 1, 1, (1, 1)),
    ("2;1,1", 1, 2, (2, 1, 1)),
    ("(1,1;2)", 2, 1, (1, 1, 2)),
    ("2:2:3,1,2,2", 2, 2, (3, 1, 2, 2)),
])
def test_parse_forms(text, m, n, a):
    w = Weights.parse(text)
    assert (w.m, w.n, w.a) == (m, n, a)
    assert Weights.parse(str(w)) == w


@pytest.mark.parametrize("text", ["1;2", "1:1:1", "0;0", "1:1:1,x", "1,1"])
def test_rejects_bad_weights(text):
    with pytest.raises(InvalidWeights):
        Weights.parse(text)


def test_equal_weights_and_sides():
    w = Weights.equal(2, 3)
    assert w.a == (3, 3, 2, 2, 2)
    assert w.alpha == (3, 3) and w.beta == (2, 2, 2)
    assert w.side("beta") == w.beta
    assert w.d == 5 and w.lcm == 6
