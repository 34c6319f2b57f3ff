import math
from pathlib import Path

import numpy as np
import pytest

import mchomog

ROOT = Path(__file__).resolve().parents[2]

SMALL = """
[experiment]
name = py_small
[grid]
fine_cells = 32
blocks = 4
layers = 1
[field]
type = layered
stripe_period = 0.25
stripe_offset = 0.0625
stripe_width = 0.09375
[boundary]
case = 2
[time]
tau = 0.01
t_end = 0.1
output_times = 0.05 0.1
"""


def test_poisson_manufactured():
    errs = []
    for n in (16, 32):
        h = 1.0 / n
        xc = (np.arange(n) + 0.5) * h
        X, Y = np.meshgrid(xc, xc)
        g = 2 * math.pi**2 * np.sin(math.pi * X) * np.sin(math.pi * Y)
        p = mchomog.solve_poisson(n, np.ones(n * n), g.ravel())
        xn = np.linspace(0, 1, n + 1)
        Xn, Yn = np.meshgrid(xn, xn)
        errs.append(np.abs(p - (np.sin(math.pi * Xn) * np.sin(math.pi * Yn)).ravel()).max())
    assert errs[1] < errs[0] / 3


def test_poisson_linear_boundary():
    n = 8
    p = mchomog.solve_poisson(n, np.full(n * n, 3.0), np.zeros(n * n), linear_x=True)
    x = np.tile(np.linspace(0, 1, n + 1), n + 1)
    assert np.allclose(p, x, atol=1e-12)


def test_poisson_rejects_bad_sizes():
    with pytest.raises(ValueError):
        mchomog.solve_poisson(4, np.ones(3), np.ones(16))


def test_fnv_reference_values():
    assert mchomog.fnv1a64(b"") == 0xCBF29CE484222325
    assert mchomog.fnv1a64(b"a") == 0xAF63DC4C8601EC8C
    assert mchomog.fnv1a64(b"foobar") == 0x85944171F73967E8


def test_shipped_config_loads():
    cfg = mchomog.load(ROOT / "configs" / "example1_case1_H10.cfg")
    assert cfg.blocks == 10 and cfg.fine_cells == 200 and cfg.layers == 5
    assert cfg.case == 1
    other = mchomog.load(ROOT / "configs" / "example1_case1_H10.cfg", {"grid.blocks": "20"})
    assert other.blocks == 20 and other.hash() != cfg.hash()


def test_bad_config_raises():
    with pytest.raises(Exception):
        mchomog.parse("[grid]\nblocks = -3\n")


def test_small_run(tmp_path):
    cfg = mchomog.parse(SMALL)
    messages = []
    r = mchomog.run(cfg, threads=2, log=messages.append)
    assert messages
    assert np.allclose(r.times, [0.05, 0.1])
    assert r.errors.shape == (2, 2)
    assert np.all(np.isfinite(r.errors)) and np.all(r.errors > 0)
    assert max(r.max_residual) < 1e-10
    assert r.macro_c.shape == (2, 2 * 25)
    f = r.flow(5)
    assert f["continua"] == 2 and f["alpha"].shape == (16,)
    assert abs(r.transport(5)["gamma"].sum() - 1.0) < 1e-8
    r.write(tmp_path)
    times, errors = mchomog.read_errors(tmp_path / "errors.csv")
    assert np.array_equal(times, r.times) and np.array_equal(errors, r.errors)


def test_run_without_fine():
    r = mchomog.run(mchomog.parse(SMALL), fine=False)
    assert not r.has_fine and r.center_of_mass.shape == (2, 2)
