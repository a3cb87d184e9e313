"""Named architecture presets over configurable input sizes.

The reference geometry is a 100x150 canvas with 30x40 first-block kernels.
Kernels scale proportionally with the input so the same preset constructs
at reduced sizes (training and gradient checks routinely run at 50x75 or
32x48). All presets end in a 128-unit fully connected layer and a 3-way
classifier head.

  a1         conv, conv, pool, fc
  a2         (conv, pool) x 2, fc
  a3         conv x 4, pool, conv, pool, fc
  mini-alex  five conv layers with pools after the first, second, and
             fifth, then fc with dropout; an AlexNet-shaped stack at a
             small fraction of the size.
"""

from typing import Optional, Tuple

from ..errors import ParameterError
from .model import (
    ArchitectureSpec,
    conv,
    dropout,
    fc,
    maxpool,
    relu,
    stack_with_crops,
)

BASE_HW = (100, 150)
FC_UNITS = 128


def _scale(k: int, dim: int, base: int) -> int:
    return max(1, int(k * dim / base + 0.5))


def _kernel(kh: int, kw: int, hw: Tuple[int, int]) -> Tuple[int, int]:
    return _scale(kh, hw[0], BASE_HW[0]), _scale(kw, hw[1], BASE_HW[1])


def _spec(raw, hw, channels, n_classes):
    input_shape = (channels, hw[0], hw[1])
    return ArchitectureSpec(
        input_shape=input_shape,
        layers=stack_with_crops(raw, input_shape),
        n_classes=n_classes,
    )


def a1(hw=BASE_HW, channels=3, filters=5, n_classes=3) -> ArchitectureSpec:
    kh, kw = _kernel(30, 40, hw)
    raw = [
        conv(filters, kh, kw), relu(),
        conv(filters, kh, kw), relu(),
        maxpool(2, 2),
        fc(FC_UNITS), relu(),
        fc(n_classes),
    ]
    return _spec(raw, hw, channels, n_classes)


def a2(hw=BASE_HW, channels=3, filters=5, n_classes=3) -> ArchitectureSpec:
    kh, kw = _kernel(30, 40, hw)
    raw = [
        conv(filters, kh, kw), relu(), maxpool(2, 2),
        conv(filters, kh, kw), relu(), maxpool(2, 2),
        fc(FC_UNITS), relu(),
        fc(n_classes),
    ]
    return _spec(raw, hw, channels, n_classes)


def a3(hw=BASE_HW, channels=3, filters=5, n_classes=3) -> ArchitectureSpec:
    kh, kw = _kernel(30, 40, hw)
    sh, sw = _kernel(5, 5, hw)
    raw = [
        conv(filters, kh, kw), relu(),
        conv(filters, sh, sw), relu(),
        conv(filters, sh, sw), relu(),
        conv(filters, sh, sw), relu(),
        maxpool(2, 2),
        conv(filters, sh, sw), relu(),
        maxpool(2, 2),
        fc(FC_UNITS), relu(),
        fc(n_classes),
    ]
    return _spec(raw, hw, channels, n_classes)


def mini_alex(hw=BASE_HW, channels=3, filters=None, n_classes=3) -> ArchitectureSpec:
    f1 = 8 if filters is None else filters
    f2, f3 = int(f1 * 1.5), f1 * 2
    k1 = _kernel(7, 7, hw)
    k2 = _kernel(5, 5, hw)
    k3 = _kernel(3, 3, hw)
    raw = [
        conv(f1, *k1), relu(), maxpool(2, 2),
        conv(f2, *k2), relu(), maxpool(2, 2),
        conv(f3, *k3), relu(),
        conv(f3, *k3), relu(),
        conv(f2, *k3), relu(), maxpool(2, 2),
        fc(FC_UNITS), relu(), dropout(0.5),
        fc(n_classes),
    ]
    return _spec(raw, hw, channels, n_classes)


ARCHITECTURES = {
    "a1": a1,
    "a2": a2,
    "a3": a3,
    "mini-alex": mini_alex,
}


def build_architecture(
    name: str,
    hw: Tuple[int, int] = BASE_HW,
    channels: int = 3,
    filters: Optional[int] = None,
    n_classes: int = 3,
) -> ArchitectureSpec:
    if name not in ARCHITECTURES:
        raise ParameterError(
            f"unknown architecture {name!r}; choose from {sorted(ARCHITECTURES)}"
        )
    kwargs = {"hw": tuple(hw), "channels": channels, "n_classes": n_classes}
    if filters is not None:
        kwargs["filters"] = filters
    return ARCHITECTURES[name](**kwargs)
