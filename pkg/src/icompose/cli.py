"""Command-line driver.

Exit codes are a stable contract: 0 success, 1 usage error, 2 I/O
error, 3 validation error.
"""

from __future__ import annotations

import math
import os
import sys

import click
import numpy as np

from . import brdf_lut, reference, ssr
from . import manifest as manifest_mod
from . import metrics as metrics_mod
from .compose import compose as compose_channels
from .compose import tonemap
from .errors import ImageIOError, ValidationError
from .imageio import ImagePlane, LINEAR, load_image, save_image

LUT_ENV_VAR = "ICOMPOSE_LUT"


@click.group()
def cli():
    """Compose photoreal images from intrinsic channel sets."""


def _parse_grid(text):
    try:
        a, b = text.lower().split("x")
        return int(a), int(b)
    except Exception:
        raise click.UsageError(f"grid must look like 32x32, got {text!r}")


@cli.command("bake-lut")
@click.option("--grid", default="32x32", show_default=True, help="roughness x cosine cells")
@click.option("--samples", default=1 << 18, show_default=True, help="samples per cell")
@click.option("--seed", default=0, show_default=True)
@click.option("--workers", default=1, show_default=True)
@click.option("--out", required=True, type=click.Path())
@click.option("--compare", type=click.Path(exists=False), default=None,
              help="print max deviation against an existing table")
def bake_lut_cmd(grid, samples, seed, workers, out, compare):
    """Tabulate the split-sum (A, B) pairs and write the table."""
    n_rough, n_cos = _parse_grid(grid)
    lut = brdf_lut.bake_lut(n_rough, n_cos, samples, seed, workers)
    if compare:
        prev = brdf_lut.load_lut(compare)
        if prev.entries.shape != lut.entries.shape:
            raise ValidationError("comparison table has a different grid")
        dev = float(np.abs(prev.entries - lut.entries).max())
        click.echo(f"max deviation vs {compare}: {dev:.6f}")
    brdf_lut.save_lut(lut, out)
    click.echo(f"wrote {n_rough}x{n_cos} table to {out}")


@cli.command("ssrt")
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--out-color", required=True, type=click.Path())
@click.option("--out-mask", default=None, type=click.Path())
@click.option("--max-steps", default=512, show_default=True)
@click.option("--thickness", default=0.01, show_default=True)
@click.option("--refine-steps", default=8, show_default=True)
@click.option("--fill", default="constant-gray", show_default=True,
              type=click.Choice(["constant-gray", "hole"]))
@click.option("--workers", default=1, show_default=True)
def ssrt_cmd(manifest_path, out_color, out_mask, max_steps, thickness, refine_steps,
             fill, workers):
    """Trace the mirror reflection image from depth + normals."""
    man = manifest_mod.load_manifest(manifest_path)
    cs = manifest_mod.load_channelset(man)
    cfg = ssr.SsrConfig(max_steps=max_steps, thickness=thickness,
                        refine_steps=refine_steps, miss_fill=fill)
    source = ImagePlane(cs.albedo.data * cs.irradiance.data)
    layer = ssr.trace_reflections(cs.depth, cs.normal, source,
                                  cs.camera_or_default(), cfg, workers=workers)
    save_image(layer.color, out_color)
    if out_mask:
        save_image(layer.valid, out_mask, LINEAR, bits=8)
    click.echo(f"traced {int(layer.valid.data.sum())} valid pixels -> {out_color}")


def _resolve_lut(lut_path):
    path = lut_path or os.environ.get(LUT_ENV_VAR)
    if not path:
        raise click.UsageError(
            f"no LUT given: pass --lut or set ${LUT_ENV_VAR}"
        )
    return brdf_lut.load_lut(path)


@cli.command("compose")
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--lut", "lut_path", default=None, type=click.Path())
@click.option("--out-prefix", required=True)
@click.option("--layers", is_flag=True, help="also write the three layer images")
@click.option("--tonemap", "tonemap_mode", default="clamp-srgb", show_default=True,
              type=click.Choice(["clamp-srgb", "reinhard-srgb"]))
@click.option("--exposure", default=1.0, show_default=True)
@click.option("--d-px", default=None, type=int,
              help="kernel distance override (defaults to the manifest value)")
@click.option("--trace-missing-reflection", is_flag=True,
              help="derive the reflection channel by screen-space tracing if absent")
@click.option("--workers", default=1, show_default=True)
def compose_cmd(manifest_path, lut_path, out_prefix, layers, tonemap_mode, exposure,
                d_px, trace_missing_reflection, workers):
    """Assemble the final image (PFM linear + PNG display)."""
    man = manifest_mod.load_manifest(manifest_path)
    lut = _resolve_lut(lut_path)
    cs = manifest_mod.load_channelset(
        man, trace_missing_reflection=trace_missing_reflection, workers=workers
    )
    stack = compose_channels(cs, lut, d_px if d_px is not None else man.kernel_distance_px)
    save_image(stack.final, out_prefix + ".pfm")
    display = tonemap(stack.final, tonemap_mode, exposure)
    save_image(display, out_prefix + ".png", LINEAR, bits=8)
    if layers:
        for name, plane in (("diff", stack.diffuse), ("spec", stack.specular),
                            ("tran", stack.transmission)):
            save_image(plane, f"{out_prefix}_{name}.pfm")
    click.echo(f"wrote {out_prefix}.pfm and {out_prefix}.png")


@cli.command("render-ref")
@click.option("--scene", "scene_path", required=True, type=click.Path())
@click.option("--spp", default=256, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
@click.option("--irradiance-out", default=None, type=click.Path())
@click.option("--workers", default=1, show_default=True)
def render_ref_cmd(scene_path, spp, seed, out, irradiance_out, workers):
    """Path-trace the scene as ground truth for the compositor."""
    scene = reference.load_scene(scene_path)
    settings = reference.RenderSettings(spp=spp, seed=seed)
    img = reference.render(scene, settings, workers=workers)
    save_image(img, out)
    if irradiance_out:
        irr = reference.render_irradiance(scene, settings, workers=workers)
        save_image(irr, irradiance_out)
    click.echo(f"rendered {scene.camera.width}x{scene.camera.height} at {spp} spp -> {out}")


@cli.command("metrics")
@click.argument("image_a", type=click.Path())
@click.argument("image_b", type=click.Path())
def metrics_cmd(image_a, image_b):
    """Print PSNR (dB) and mean absolute error between two images.

    PNG files are compared on their stored display codes; HDR inputs are
    clamp+sRGB tonemapped first.
    """

    def load_display(path):
        img = load_image(path, LINEAR)
        if path.lower().endswith(".pfm"):
            return metrics_mod.to_display(img)
        return img

    a = load_display(image_a)
    b = load_display(image_b)
    p = metrics_mod.psnr(a, b)
    click.echo(f"psnr_db: {'inf' if math.isinf(p) else f'{p:.4f}'}")
    click.echo(f"mae: {metrics_mod.mae(a, b):.6f}")


@cli.command("serve")
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--session-root", required=True, type=click.Path())
@click.option("--lut", "lut_path", default=None, type=click.Path())
@click.option("--frontend", default=None, type=click.Path(),
              help="static directory to serve at /ui")
def serve_cmd(port, host, session_root, lut_path, frontend):
    """Run the compose HTTP service."""
    import uvicorn

    from .service import create_app

    lut = _resolve_lut(lut_path)
    app = create_app(session_root, lut, frontend_dir=frontend)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@cli.command("demo-scene")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--size", default=128, show_default=True)
def demo_scene_cmd(out_dir, size):
    """Write a synthetic channel set (mirror floor + checker wall)."""
    from .demo import write_demo_scene

    manifest_path = write_demo_scene(out_dir, size)
    click.echo(f"wrote {manifest_path}")


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as e:
        click.echo(f"usage error: {e.format_message()}", err=True)
        return 1
    except click.ClickException as e:
        e.show()
        return 1
    except click.Abort:
        return 1
    except (ImageIOError, OSError) as e:
        click.echo(f"i/o error: {e}", err=True)
        return 2
    except ValidationError as e:
        click.echo(f"validation error: {e}", err=True)
        return 3


if __name__ == "__main__":
    sys.exit(main())
