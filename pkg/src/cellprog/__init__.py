"""Compile declarative robot-cell scenes into INFORM- and RAPID-style robot programs."""
from .errors import CellprogError
from .scene import SceneDocument, parse_scene, validate_scene, write_scene
from .transforms import OrientationTriple, Point3, Transform, UnitQuaternion

__version__ = "0.1.0"

__all__ = [
    "CellprogError", "OrientationTriple", "Point3", "SceneDocument", "Transform",
    "UnitQuaternion", "parse_scene", "validate_scene", "write_scene",
]
