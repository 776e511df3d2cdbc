"""Blind repair of corrupted template images.

Every corruption goes through the same pipeline, which never learns what the
damage was.  The script prints how often the output is more likely than the
input under the prior, and how far it moved.

Run: python3 demos/editing_corrupted_templates.py [--out-dir pgm_out]
"""

import argparse
from pathlib import Path

import numpy as np

from codedit import (
    CbcConfig,
    CorruptionSpec,
    EditConfig,
    GmmScoreModel,
    LangevinConfig,
    SdeditConfig,
    code_full,
    corrupt,
    l2,
    loglik_realism,
    make_grid,
    make_linear_schedule,
    named_template_prior,
    sdedit,
)
from codedit.io import save_image_pgm

parser = argparse.ArgumentParser()
parser.add_argument("--out-dir", help="also write before/after PGM images here")
args = parser.parse_args()

schedule = make_linear_schedule()
grid = make_grid(schedule)
prior = named_template_prior("patterns16", 0.1)
model = GmmScoreModel(prior, schedule)
x = prior.sample(40, rng=3)

cfg = EditConfig(latent_depths=(40,), langevin=LangevinConfig(200, 1e-3, 4, 0.8, 0), cbc=CbcConfig(1.7), grid=grid)
specs = ["gaussian_noise:0.5:1", "contrast:0.7:1", "mask_random_pixels:0.3:1",
         "mask_vlines:0.3:1", "gaussian_blur:1.5:1", "fog_like_additive:0.5:1"]

print(f"{'corruption':28s} {'better':>6s} {'L2 in':>6s} {'L2 src':>6s} | sdedit t0=200: {'better':>6s} {'L2 in':>6s}")
for text in specs:
    spec = CorruptionSpec.parse(text)
    xc = corrupt(x, spec, prior.image_shape)
    out = code_full(model, xc, cfg)
    ref = sdedit(model, xc, SdeditConfig(200, 200, 1, 0))
    better = np.mean(loglik_realism(prior, out) > loglik_realism(prior, xc))
    better_ref = np.mean(loglik_realism(prior, ref) > loglik_realism(prior, xc))
    print(f"{text:28s} {better:6.2f} {np.median(l2(out, xc)):6.2f} {np.median(l2(out, x)):6.2f} |"
          f"                {better_ref:6.2f} {np.median(l2(ref, xc)):6.2f}")
    if args.out_dir:
        d = Path(args.out_dir)
        d.mkdir(parents=True, exist_ok=True)
        for name, img in (("source", x[0]), ("input", xc[0]), ("code", out[0]), ("sdedit", ref[0])):
            save_image_pgm(img.reshape(prior.image_shape), d / f"{spec.kind}_{name}.pgm")
