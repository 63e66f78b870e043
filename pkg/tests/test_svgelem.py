"""Tests for vector texture-element ingestion."""
import math

import numpy as np
import pytest

import meshtex.svgelem as svgelem
from meshtex.svgelem import ElementError, TextureElement, load_element


def doc(body, attrs=""):
    return ("<svg xmlns='http://www.w3.org/2000/svg' %s>%s</svg>" % (attrs, body)).encode()


def test_circle_becomes_64gon_with_accurate_area():
    elem = load_element(doc("<circle cx='10' cy='5' r='2'/>"))
    assert len(elem.shape.outer) == 64
    exact = math.pi * 4.0
    assert abs(elem.shape.area - exact) / exact < 0.005


def test_rect_is_exact_square():
    elem = load_element(doc("<rect x='1' y='2' width='4' height='4'/>"))
    assert len(elem.shape.outer) == 4
    assert elem.shape.area == pytest.approx(16.0)
    assert elem.nominal_size == pytest.approx(math.sqrt(32.0))


def test_annulus_outer_plus_hole():
    elem = load_element(
        doc("<circle cx='0' cy='0' r='3'/><circle cx='0' cy='0' r='1'/>")
    )
    assert len(elem.shape.holes) == 1
    exact = math.pi * (9.0 - 1.0)
    assert abs(elem.shape.area - exact) / exact < 0.005


def test_centroid_at_origin():
    elem = load_element(doc("<rect x='40' y='17' width='6' height='2'/>"))
    assert np.linalg.norm(elem.shape.centroid()) < 1e-9
    elem = load_element(doc("<circle cx='-31' cy='8' r='2.5'/>"))
    assert np.linalg.norm(elem.shape.centroid()) < 1e-9


def test_flattening_refinement_converges(monkeypatch):
    body = "<path d='M 0 0 C 4 0 4 4 0 4 Q -3 2 0 0 Z'/>"
    a1 = load_element(doc(body)).shape.area
    monkeypatch.setattr(svgelem, "CHORD_DEVIATION", svgelem.CHORD_DEVIATION / 2.0)
    a2 = load_element(doc(body)).shape.area
    assert abs(a2 - a1) / a2 < 0.005


def test_path_absolute_and_relative_match():
    p1 = load_element(doc("<path d='M 1 1 L 4 1 L 4 5 Z'/>"))
    p2 = load_element(doc("<path d='m 1 1 l 3 0 l 0 4 z'/>"))
    assert p1.shape.area == pytest.approx(p2.shape.area)
    assert p1.shape.area == pytest.approx(6.0)


def test_path_h_v_commands():
    elem = load_element(doc("<path d='M 0 0 H 5 V 3 H 0 Z'/>"))
    assert elem.shape.area == pytest.approx(15.0)


def test_path_arc_half_circles():
    # Two half-circle arcs of radius 2 make a full disc.
    elem = load_element(doc("<path d='M -2 0 A 2 2 0 0 1 2 0 A 2 2 0 0 1 -2 0 Z'/>"))
    exact = math.pi * 4.0
    assert abs(elem.shape.area - exact) / exact < 0.005


def test_path_smooth_and_quadratic_commands():
    elem = load_element(
        doc("<path d='M 0 0 Q 2 2 4 0 T 8 0 L 8 -2 L 0 -2 Z'/>")
    )
    # Quadratic humps add and subtract the same lens area over y=0.
    assert elem.shape.area == pytest.approx(16.0, rel=0.01)


def test_polygon_element():
    elem = load_element(doc("<polygon points='0,0 4,0 4,3'/>"))
    assert elem.shape.area == pytest.approx(6.0)


def test_ellipse_element():
    elem = load_element(doc("<ellipse cx='0' cy='0' rx='4' ry='2'/>"))
    exact = math.pi * 8.0
    assert abs(elem.shape.area - exact) / exact < 0.005


def test_transform_chain_applies():
    body = "<g transform='translate(10 0) scale(2)'><rect x='0' y='0' width='1' height='1' transform='rotate(45)'/></g>"
    elem = load_element(doc(body))
    assert elem.shape.area == pytest.approx(4.0)


def test_matrix_transform():
    elem = load_element(
        doc("<rect x='0' y='0' width='2' height='2' transform='matrix(2 0 0 1 5 5)'/>")
    )
    assert elem.shape.area == pytest.approx(8.0)


def test_millimeter_units_scale_viewbox():
    attrs = "width='10mm' height='10mm' viewBox='0 0 100 100'"
    elem = load_element(doc("<rect x='0' y='0' width='100' height='100'/>", attrs))
    assert elem.shape.area == pytest.approx(100.0)  # 10mm x 10mm


def test_px_is_mm_one_to_one():
    elem = load_element(doc("<rect x='0' y='0' width='3' height='3'/>"))
    assert elem.shape.area == pytest.approx(9.0)


def test_rejects_empty_document():
    with pytest.raises(ElementError):
        load_element(doc(""))


def test_rejects_open_path_only():
    with pytest.raises(ElementError):
        load_element(doc("<path d='M 0 0 L 1 0 L 1 1'/>"))


def test_rejects_self_intersecting_path():
    with pytest.raises(ElementError):
        load_element(doc("<path d='M 0 0 L 2 2 L 2 0 L 0 2 Z'/>"))


def test_rejects_two_separate_outlines():
    body = "<rect x='0' y='0' width='1' height='1'/><rect x='5' y='5' width='1' height='1'/>"
    with pytest.raises(ElementError):
        load_element(doc(body))


def test_rejects_island_in_hole():
    body = (
        "<circle cx='0' cy='0' r='5'/>"
        "<circle cx='0' cy='0' r='3'/>"
        "<circle cx='0' cy='0' r='1'/>"
    )
    with pytest.raises(ElementError):
        load_element(doc(body))


def test_rejects_non_svg_root():
    with pytest.raises(ElementError):
        load_element(b"<html><body/></html>")


def test_rejects_broken_xml():
    with pytest.raises(ElementError):
        load_element(b"<svg><rect")


def test_rejects_numbers_after_close():
    with pytest.raises(ElementError):
        load_element(doc("<path d='M 0 0 L 1 0 L 1 1 Z 9 9'/>"))


def test_element_is_frozen_value():
    elem = load_element(doc("<rect x='0' y='0' width='2' height='2'/>"))
    assert isinstance(elem, TextureElement)
    with pytest.raises(AttributeError):
        elem.nominal_size = 1.0
