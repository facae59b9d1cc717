"""Tests for the repository structure checker in scripts/."""
import importlib.util
from pathlib import Path

import pytest

SCRIPT = Path(__file__).resolve().parents[2] / "scripts" / "check_structure.py"


@pytest.fixture(scope="module")
def checker():
    spec = importlib.util.spec_from_file_location("check_structure", SCRIPT)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def _write(path: Path, text: str = "") -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def test_classify_core_subfolder(checker):
    """Test component folder names.

    This test verifies that:
    1. Versioned component folders are recognised
    2. utils is recognised without a version
    3. Unknown names are rejected
    """
    assert checker.classify_core_subfolder("tensor_1_1_0") == "tensor"
    assert checker.classify_core_subfolder("prompting_1_7_0") == "prompting"
    assert checker.classify_core_subfolder("utils") == "utils"
    assert checker.classify_core_subfolder("tensor") is None


def test_import_boundaries(checker, tmp_path):
    """Test the import rules.

    This test verifies that:
    1. The model may import the tensor library
    2. The tensor library may not import the model
    """
    _write(tmp_path / "core" / "model_1_4_0" / "model.py", "from core.tensor_1_1_0 import ops\n")
    assert checker.validate_import_boundaries(tmp_path) == []
    _write(tmp_path / "core" / "tensor_1_1_0" / "ops.py", "from core.model_1_4_0.model import MVFormer\n")
    errors = checker.validate_import_boundaries(tmp_path)
    assert len(errors) == 1
    assert "tensor may not import model" in errors[0]


def test_repository_core_layout(checker):
    """Test this repository's own core/ tree.

    This test verifies that:
    1. Every core sub-folder has an approved name
    2. No component crosses an import boundary
    """
    root = SCRIPT.parent.parent
    assert checker.validate_core_structure(root) == []
    assert checker.validate_import_boundaries(root) == []
