"""
Basic tests for subshift tiling compiler components
"""
import os

import pytest


# Test imports work correctly
def test_imports():
    """Test that all modules can be imported"""
    try:
        from utils.compiler import compile_system
        from utils.renderer import TilingRenderer
        from utils.solver import tile_region
        assert compile_system and TilingRenderer and tile_region
    except ImportError as e:
        pytest.fail(f"Import failed: {e}")


def test_error_hierarchy():
    """Every package error derives from TilingError"""
    from utils import errors

    for name in ("SpecFormatError", "ScheduleError", "AssemblyError", "FlattenBoundError", "ArtifactError"):
        assert issubclass(getattr(errors, name), errors.TilingError)
    assert issubclass(errors.FlattenBoundError, errors.ResourceLimitError)


def test_artifact_kinds(tmp_path):
    """Test JSON artifact round trip and kind detection"""
    from utils.artifacts import kind_of, load_json, save_json
    from utils.hierarchy import build_assembly
    from utils.schedule import ZoomSchedule

    path = save_json(str(tmp_path / "nested" / "a.json"), build_assembly("01", 1, ZoomSchedule.doubling(1)).to_dict())
    assert kind_of(load_json(path)) == "assembly"
    assert kind_of({"colors": 1, "tiles": []}) == "tileset"
    assert kind_of({"kind": "finite", "words": []}) == "subshift"
    assert kind_of([]) == "unknown"


def test_missing_artifact():
    from utils.artifacts import load_json
    from utils.errors import ArtifactError

    with pytest.raises(ArtifactError):
        load_json(os.path.join("no", "such", "file.json"))


def test_bad_artifact_payload(tmp_path):
    from utils.artifacts import load_artifact
    from utils.errors import ArtifactError
    from utils.schedule import ZoomSchedule

    path = tmp_path / "s.json"
    path.write_text("[1, 2]")
    with pytest.raises(ArtifactError):
        load_artifact(str(path), ZoomSchedule.from_dict)


if __name__ == "__main__":
    pytest.main([__file__])
