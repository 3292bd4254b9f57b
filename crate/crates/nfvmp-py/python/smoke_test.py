"""Smoke test for the nfvmp_py extension module.

Run after building, e.g. ``maturin develop`` or with PYTHONPATH pointing at a
directory holding the built ``nfvmp_py`` shared library.
"""

import math

import nfvmp_py


def main():
    p, v = nfvmp_py.crb_bounds("preset = table2\nsnr_db = 10\n")
    assert math.isclose(p, 7.430367e-4, rel_tol=1e-5), p
    assert math.isclose(v, 1.993615e-3, rel_tol=1e-5), v

    est = nfvmp_py.estimate("preset = desk\nsnr_db = 20\n", "vmp-system", seed=3)
    assert est["method"] == "vmp-system"
    assert est["err_p_m"] < 0.1, est

    rows = nfvmp_py.sweep("preset = desk\nmethods = vmp-system\nsweep_values = 0,20\ntrials = 3\nseed = 1\n")
    assert [r["sweep_value"] for r in rows] == [0.0, 20.0]
    assert rows[1]["rmse_p_m"] < rows[0]["rmse_p_m"]

    try:
        nfvmp_py.crb_bounds("colour = blue\n")
    except ValueError as e:
        assert "colour" in str(e)
    else:
        raise AssertionError("unknown key accepted")

    checks = nfvmp_py.run_selftest(1)
    failed = [c for c in checks if not c[1]]
    assert not failed, failed
    print(f"ok: crb {p:.3e} m, estimate error {est['err_p_m']:.3e} m, {len(checks)} self checks")


if __name__ == "__main__":
    main()
