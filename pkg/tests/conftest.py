import numpy as np
import pytest

from meshtex.autocomplete import PlacementEvent
from meshtex.geom2d import Polygon2
from meshtex.imprint import imprint
from meshtex.shapes import cube, cylinder
from meshtex.svgelem import TextureElement
from meshtex.uvmap import build_chart

from uvgrid import find_grid_anchors


def circle_element(radius: float = 1.0, segments: int = 64) -> TextureElement:
    t = np.linspace(0.0, 2.0 * np.pi, segments, endpoint=False)
    ring = np.column_stack([radius * np.cos(t), radius * np.sin(t)])
    return TextureElement(shape=Polygon2(ring), nominal_size=2.0 * radius)


def grid_events(anchors) -> tuple:
    return tuple(
        PlacementEvent(anchor=np.asarray(a, dtype=np.float64),
                       rotation=0.0, scale=1.0, seq=i + 1)
        for i, a in enumerate(anchors)
    )


@pytest.fixture(scope="session")
def cylinder_scene():
    """Capped cylinder with a 3x3 circle grid imprinted on its side."""
    mesh = cylinder(5.0, 10.0, segments=64, rings=12)
    chart = build_chart(mesh)
    element = circle_element(1.0)
    centroids = mesh.positions[mesh.faces].mean(axis=1)
    radial = np.linalg.norm(centroids[:, :2], axis=1)
    band = np.nonzero((radial > 4.5) & (np.abs(centroids[:, 2]) < 3.0))[0]
    anchors = find_grid_anchors(
        chart, spacing=3.0, ring=element.shape.outer,
        rows=3, cols=3, among_faces=band, margin=0.75,
    )
    events = grid_events(anchors)
    im = imprint(mesh, chart, element, events)
    return {
        "mesh": mesh,
        "chart": chart,
        "element": element,
        "events": events,
        "im": im,
    }


@pytest.fixture(scope="session")
def cube_scene():
    """Closed cube with one circle imprinted on the top face.

    The cube is 10 mm across, so embossing rays fired from the top
    face hit the bottom face at exactly 10 mm.
    """
    mesh = cube(10.0, subdiv=10)
    chart = build_chart(mesh)
    element = circle_element(1.0)
    centroids = mesh.positions[mesh.faces].mean(axis=1)
    top = np.nonzero(centroids[:, 2] > 4.9)[0]
    anchors = find_grid_anchors(
        chart, spacing=1.0, ring=element.shape.outer,
        rows=1, cols=1, among_faces=top, allowed_faces=top, margin=0.75,
    )
    events = grid_events(anchors)
    im = imprint(mesh, chart, element, events)
    return {
        "mesh": mesh,
        "chart": chart,
        "element": element,
        "events": events,
        "im": im,
    }
