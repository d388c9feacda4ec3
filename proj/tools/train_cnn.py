#!/usr/bin/env python3
"""Train the bundled residual CNN denoiser and export it in the .pnpw weight format.

The network is 7 zero-padded 3x3 conv layers (1 -> 16 -> ... -> 16 -> 1, ReLU between)
predicting the noise component; the denoised image is x - net(x). Training data are
random ellipse phantoms in [0,1] corrupted by Gaussian noise with a random level.

    python3 tools/train_cnn.py --out data/cnn_phantom_7x16.pnpw
"""
import argparse
import math
import struct

import numpy as np
import torch
import torch.nn as nn

MAGIC = b"PNPCNN\x00\x00"
VERSION = 1


def random_phantom(rng, n):
    yy, xx = np.mgrid[0:n, 0:n]
    x = (2 * xx + 1) / n - 1
    y = 1 - (2 * yy + 1) / n
    img = np.zeros((n, n))

    def ellipse(v, a, b, cx, cy, phi):
        c, s = math.cos(phi), math.sin(phi)
        u = (x - cx) * c + (y - cy) * s
        w = -(x - cx) * s + (y - cy) * c
        return v * ((u / a) ** 2 + (w / b) ** 2 <= 1)

    a, b = rng.uniform(0.6, 0.95), rng.uniform(0.6, 0.95)
    cx, cy = rng.uniform(-0.05, 0.05, size=2)
    phi = rng.uniform(-0.3, 0.3)
    img += ellipse(1.0, a, b, cx, cy, phi)
    img += ellipse(-rng.uniform(0.6, 0.9), a * 0.94, b * 0.94, cx, cy - 0.02, phi)
    for _ in range(rng.integers(3, 12)):
        img += ellipse(rng.choice([-1, 1]) * rng.uniform(0.05, 0.3),
                       rng.uniform(0.02, 0.3), rng.uniform(0.02, 0.4),
                       rng.uniform(-0.5, 0.5), rng.uniform(-0.6, 0.6),
                       rng.uniform(-math.pi, math.pi))
    return np.clip(img, 0.0, 1.0)


class Net(nn.Module):
    def __init__(self, depth=7, width=16):
        super().__init__()
        chans = [1] + [width] * (depth - 1) + [1]
        self.convs = nn.ModuleList(
            nn.Conv2d(chans[i], chans[i + 1], 3, padding=1) for i in range(depth))

    def forward(self, x):
        h = x
        for i, conv in enumerate(self.convs):
            h = conv(h)
            if i + 1 < len(self.convs):
                h = torch.relu(h)
        return h


def export(net, path):
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(net.convs)))
        f.write(struct.pack("<B3x", 1))
        for i, conv in enumerate(net.convs):
            w = conv.weight.detach().double().numpy()
            bias = conv.bias.detach().double().numpy()
            act = 1 if i + 1 < len(net.convs) else 0
            f.write(struct.pack("<5I", w.shape[0], w.shape[1], w.shape[2], w.shape[3], act))
            f.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(bias, dtype="<f8").tobytes())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", required=True)
    ap.add_argument("--steps", type=int, default=3000)
    ap.add_argument("--batch", type=int, default=16)
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--sigma-min", type=float, default=0.02)
    ap.add_argument("--sigma-max", type=float, default=0.2)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()

    torch.manual_seed(args.seed)
    rng = np.random.default_rng(args.seed)
    net = Net().double()
    opt = torch.optim.Adam(net.parameters(), lr=1e-3)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, args.steps)
    pool = [random_phantom(rng, args.size) for _ in range(512)]
    for step in range(args.steps):
        idx = rng.integers(0, len(pool), size=args.batch)
        clean = np.stack([pool[i] for i in idx])[:, None]
        if rng.random() < 0.5:
            clean = clean[:, :, :, ::-1]
        sig = rng.uniform(args.sigma_min, args.sigma_max, size=(args.batch, 1, 1, 1))
        noise = rng.standard_normal(clean.shape) * sig
        xt = torch.from_numpy(np.ascontiguousarray(clean + noise))
        nt = torch.from_numpy(np.ascontiguousarray(noise))
        loss = ((net(xt) - nt) ** 2).mean()
        opt.zero_grad()
        loss.backward()
        opt.step()
        sched.step()
        if step % 500 == 0 or step + 1 == args.steps:
            print(f"step {step:5d}  loss {loss.item():.3e}")
    export(net, args.out)
    print("wrote", args.out)


if __name__ == "__main__":
    main()
