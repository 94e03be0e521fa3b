import numpy as np
import pytest

from paretocl.stream import synth_stream


def numeric_grad(f, tensors, eps=1e-5):
    """Central differences of the scalar ``f()`` w.r.t. each tensor's data, in place."""
    out = []
    for t in tensors:
        g = np.zeros_like(t.data)
        flat = t.data.reshape(-1)
        gf = g.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + eps
            hi = f()
            flat[i] = old - eps
            lo = f()
            flat[i] = old
            gf[i] = (hi - lo) / (2 * eps)
        out.append(g)
    return out


def rel_err(a, b, floor=1e-8):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), floor))


@pytest.fixture(scope="session")
def small_stream():
    return synth_stream(num_tasks=3, classes_per_task=2, samples_per_class=60, in_dim=4, spread=0.5, seed=3)


ACCEPTANCE_LINES: list[str] = []


def record_criterion(label: str, ok: bool, detail: str = "") -> None:
    """Log one acceptance line, then fail the calling test if ``ok`` is false."""
    line = f"criterion {label}: {'PASS' if ok else 'FAIL'}" + (f"  ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
