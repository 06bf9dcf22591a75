"""The committed benchmark must be exactly what the builder produces."""
import importlib.util

from conftest import BENCH, FIXTURES


def test_committed_bench_is_fresh(tmp_path):
    spec = importlib.util.spec_from_file_location("build_fixtures", FIXTURES / "build_fixtures.py")
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    out = mod.build(tmp_path / "bench")
    built = sorted(p.relative_to(out) for p in out.rglob("*") if p.is_file())
    committed = sorted(p.relative_to(BENCH) for p in BENCH.rglob("*") if p.is_file())
    assert built == committed
    assert len([p for p in built if p.suffix == ".png"]) >= 12
    assert len({p.parent for p in built}) >= 3
    for rel in built:
        assert (out / rel).read_bytes() == (BENCH / rel).read_bytes(), rel
    for name in ("bench_labels.json", "bench_planted.json"):
        assert (tmp_path / name).read_bytes() == (FIXTURES / name).read_bytes()
