"""JSON Schema for every document the CLI writes."""

from importlib import resources
import json

SCHEMA_FILE = "facepose.schema.json"


def load_schema():
    return json.loads(resources.files(__name__).joinpath(SCHEMA_FILE).read_text())


def schema_for(name):
    """Standalone schema validating the ``$defs`` entry ``name``."""
    s = load_schema()
    return {"$schema": s["$schema"], "$defs": s["$defs"], "$ref": f"#/$defs/{name}"}
