"""Randomly initialized model construction and weight bundles."""

from . import io
from .backbone import STAGE_WIDTHS, init_backbone
from .dcat import DcatParams, init_dcat, rope_basis
from .matcher import Model, init_fine


def build_model(config):
    """Seeded random weights for every module; sub-seeds keep the streams independent."""
    if config.d != STAGE_WIDTHS[-1]:
        raise ValueError(f"learned features need d = {STAGE_WIDTHS[-1]} (the backbone's 1/8 width), got d={config.d}")
    return Model(
        backbone=init_backbone([config.seed, 0]),
        dcat=init_dcat([config.seed, 1], d=config.d, heads=config.heads, L=config.L, s=config.s, fusion=config.fusion),
        fine=init_fine([config.seed, 2], d=config.d),
        tau=config.tau,
    )


def save_model(model, directory):
    tensors = {f"backbone/{k}": v for k, v in model.backbone.items()}
    tensors.update({f"fine/{k}": v for k, v in model.fine.items()})
    for ell, layer in enumerate(model.dcat.layers, start=1):
        tensors.update({f"dcat/{ell}/{k}": v for k, v in layer.items()})
    p = model.dcat
    meta = {"d": p.d, "heads": p.heads, "L": p.L, "s": p.s, "fusion": p.fusion, "tau": model.tau}
    io.save_bundle(directory, tensors, meta)


def load_model(directory):
    tensors, meta = io.load_bundle(directory)
    backbone = {k.split("/", 1)[1]: v for k, v in tensors.items() if k.startswith("backbone/")}
    fine = {k.split("/", 1)[1]: v for k, v in tensors.items() if k.startswith("fine/")}
    layers = [{} for _ in range(meta["L"])]
    for k, v in tensors.items():
        if k.startswith("dcat/"):
            _, ell, name = k.split("/", 2)
            layers[int(ell) - 1][name] = v
    dcat = DcatParams(
        d=meta["d"],
        heads=meta["heads"],
        L=meta["L"],
        s=meta["s"],
        fusion=meta["fusion"],
        basis=rope_basis(meta["d"] // meta["heads"]),
        layers=layers,
    )
    return Model(backbone, dcat, fine, float(meta["tau"]))
