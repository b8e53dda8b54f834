"""Smoke test for the feedcap extension module.

Build first:
    cargo build --release -p feedcap-py
    cp target/release/libfeedcap_py.so python/feedcap.so
"""

import json
import math
import random
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

import feedcap  # noqa: E402


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b} (tol {tol})"


def main():
    ch = feedcap.Channel.isi3()
    assert ch.order == 3
    close(ch.power_gain(0.0), (1.2 / 1.1) ** 2, 1e-12)

    d = feedcap.power_for_rate(ch, 1.0)
    assert d.n_star == 1
    close(d.power, 0.743, 0.005)
    close(d.power_db, -1.290, 0.03)
    close(d.ke, 4.0, 1e-6)
    close(d.achieved_rate(), 1.0, 1e-9)
    for z in d.eigenvalues():
        close(abs(z), math.sqrt(2.0), 1e-9)
    assert d.power <= feedcap.upper_bound(ch, 1.0)

    again = feedcap.Design.from_json(d.to_json())
    assert again.a_star == d.a_star

    awgn = feedcap.Channel.awgn()
    rate, _ = feedcap.capacity_for_power(awgn, 3.0)
    close(rate, 1.0, 1e-6)
    close(feedcap.feedforward_capacity(awgn, 3.0), 1.0, 1e-6)

    book = d.codebook(27, 0.2)
    rng = random.Random(1)
    for _ in range(50):
        k = rng.randrange(book.size)
        assert book.decode(book.encode(k)) == k
    pe = feedcap.theoretical_pe(d, 27, 0.2)
    assert 0.0 < pe < 0.01

    w = [0.1, -0.2]
    trace = d.transmit(w, [0.0] * 61)
    assert len(trace) == 61
    err = max(abs(a - b) for a, b in zip(trace.estimates[-1], w))
    assert err < 1e-10, err

    res = feedcap.run_digital(d, 2000, 27, 0.2, seed=3)
    last = res.pe[-1]
    assert last[0] == 27
    assert abs(last[1] - last[3]) <= 4.0 * max(last[2], 1e-3)
    with tempfile.TemporaryDirectory() as tmp:
        res.export(Path(tmp))
        assert (Path(tmp) / "pe.csv").read_text().startswith("T,pe_emp")

    analog = feedcap.run_analog(d, 500, 20, seed=1, checkpoints=[5, 10, 20])
    assert [row[0] for row in analog.mse_det] == [5, 10, 20]

    bits, power, mmse = feedcap.finite_horizon([[2.0]], [1.0], 5, awgn)
    assert len(mmse) == 1 and bits > 0.0 and power > 0.0

    try:
        feedcap.Channel.rational([1.0], [1.0, -1.5])
    except ValueError as e:
        assert "unstable" in str(e)
    else:
        raise AssertionError("unstable channel accepted")

    checks = feedcap.verify(ch)
    assert checks and all(passed for *_, passed in checks), checks

    json.loads(ch.to_json())
    assert isinstance(d.eigenvalues()[0], complex)
    print("smoke test passed:", d)


if __name__ == "__main__":
    main()
