#!/usr/bin/env python3
"""Regenerates the checked-in test fixtures.

Builds a small, seeded convolutional classifier, exports it as an ONNX graph
(input "input", output "logits"), and writes extraction bundles for a few
synthetic images together with masks, box sidecars and a stub-scorer table.
The outputs are committed so the C++ suites never need Python or torch.

    python3 tests/fixtures/generate_fixtures.py
"""

import json
import pathlib
import struct

import numpy as np
import torch
import torch.nn as nn

HERE = pathlib.Path(__file__).resolve().parent
MEAN = [0.485, 0.456, 0.406]
STD = [0.229, 0.224, 0.225]
SIZE = 32
NUM_CLASSES = 10


class TinyCnn(nn.Module):
    def __init__(self):
        super().__init__()
        self.block1 = nn.Sequential(
            nn.Conv2d(3, 8, 3, padding=1), nn.BatchNorm2d(8), nn.ReLU(), nn.MaxPool2d(2))
        self.block2 = nn.Sequential(
            nn.Conv2d(8, 16, 3, padding=1), nn.ReLU(), nn.MaxPool2d(2))
        self.block3 = nn.Sequential(nn.Conv2d(16, 16, 3, padding=1), nn.ReLU())
        self.head = nn.Linear(16, NUM_CLASSES)

    def forward(self, x):
        x = self.block3(self.block2(self.block1(x)))
        x = torch.flatten(nn.functional.adaptive_avg_pool2d(x, 1), 1)
        return self.head(x)


class MnistLike(nn.Module):
    def __init__(self):
        super().__init__()
        self.conv = nn.Conv2d(1, 4, 3)
        self.fc = nn.Linear(4 * 26 * 26, 10)

    def forward(self, x):
        return self.fc(torch.flatten(torch.relu(self.conv(x)), 1))


class OpZoo(nn.Module):
    """Exercises the operator kernels beyond the plain CNN path."""

    def __init__(self):
        super().__init__()
        self.strided = nn.Conv2d(3, 6, 3, stride=2, padding=1)
        self.grouped = nn.Conv2d(6, 6, 3, padding=2, dilation=2, groups=3)
        self.proj = nn.Linear(6, 5, bias=False)
        self.head = nn.Linear(20, 7)

    def forward(self, x):
        a = torch.sigmoid(self.strided(x))
        b = torch.tanh(self.grouped(a))
        b = nn.functional.leaky_relu(b, 0.1)
        c = nn.functional.max_pool2d(b, 3, stride=2, ceil_mode=True)
        d = nn.functional.avg_pool2d(b, 2, stride=2, padding=1, count_include_pad=False)
        d = torch.clamp(d, -0.5, 0.5)
        pooled = torch.cat([c.mean(dim=(2, 3)), d.mean(dim=(2, 3))], dim=0)
        e = self.proj(pooled)
        f = torch.softmax(e, dim=1) - 0.5 * e / (1.0 + e.abs())
        g = f.permute(1, 0).reshape(1, -1)
        return self.head(g.repeat(1, 2)[:, :20])


def image_hash(arr):
    """FNV-1a 64 over shape (uint64 LE) then float32 LE bits."""
    h = 0xCBF29CE484222325
    data = b"".join(struct.pack("<Q", d) for d in arr.shape)
    data += np.ascontiguousarray(arr, dtype="<f4").tobytes()
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return f"{h:016x}"


def write_npy(path, arr):
    np.save(path, np.ascontiguousarray(arr, dtype="<f4"), allow_pickle=False)


def write_bundle(path, image, features, gradients, logits, cls):
    path.mkdir(parents=True, exist_ok=True)
    tensors = {}
    for name, arr in [("image", image), ("features", features),
                      ("gradients", gradients), ("class_scores", logits)]:
        write_npy(path / f"{name}.npy", arr)
        tensors[name] = {"file": f"{name}.npy", "shape": list(arr.shape)}
    manifest = {
        "version": 1,
        "model_id": "tiny_cnn",
        "layer_name": "block3",
        "class_index": int(cls),
        "gradient_target": "logit",
        "tensors": tensors,
        "preprocessing": {"resize": [SIZE, SIZE], "mean": MEAN, "std": STD},
    }
    (path / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def write_mask_png(path, mask):
    # 8-bit palette PNG written without extra dependencies.
    import zlib
    h, w = mask.shape
    raw = b"".join(b"\x00" + bytes(row.astype(np.uint8)) for row in mask)

    def chunk(tag, payload):
        body = tag + payload
        return struct.pack(">I", len(payload)) + body + struct.pack(">I", zlib.crc32(body))

    palette = b"".join(bytes((i, i, i)) for i in range(256))
    png = b"\x89PNG\r\n\x1a\n"
    png += chunk(b"IHDR", struct.pack(">IIBBBBB", w, h, 8, 3, 0, 0, 0))
    png += chunk(b"PLTE", palette)
    png += chunk(b"IDAT", zlib.compress(raw, 9))
    png += chunk(b"IEND", b"")
    path.write_bytes(png)


def synthetic_image(rng, cy, cx):
    yy, xx = np.mgrid[0:SIZE, 0:SIZE].astype(np.float32)
    blob = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * 5.0 ** 2))
    rgb = np.stack([0.2 + 0.7 * blob * c for c in rng.uniform(0.4, 1.0, 3)])
    rgb += rng.normal(0, 0.03, rgb.shape)
    rgb = np.clip(rgb, 0, 1)
    norm = (rgb - np.array(MEAN)[:, None, None]) / np.array(STD)[:, None, None]
    return norm.astype(np.float32)


def main():
    torch.manual_seed(1234)
    rng = np.random.default_rng(1234)
    model = TinyCnn()
    with torch.no_grad():
        bn = model.block1[1]
        bn.running_mean.uniform_(-0.1, 0.1)
        bn.running_var.uniform_(0.5, 1.5)
    model.eval()

    torch.onnx.export(model, torch.zeros(1, 3, SIZE, SIZE), HERE / "tiny_cnn.onnx",
                      input_names=["input"], output_names=["logits"], opset_version=13,
                      dynamic_axes={"input": {0: "batch"}, "logits": {0: "batch"}},
                      dynamo=False)
    mnist = MnistLike().eval()
    torch.onnx.export(mnist, torch.zeros(1, 1, 28, 28), HERE / "mnist_like.onnx",
                      input_names=["input"], output_names=["logits"], opset_version=13,
                      dynamo=False)

    zoo = OpZoo().eval()
    zoo_dir = HERE / "onnx_ops"
    zoo_dir.mkdir(exist_ok=True)
    zoo_input = torch.from_numpy(rng.normal(0, 1, (1, 3, 13, 11)).astype(np.float32))
    torch.onnx.export(zoo, zoo_input, zoo_dir / "op_zoo.onnx", input_names=["input"],
                      output_names=["logits"], opset_version=13, dynamo=False)
    write_npy(zoo_dir / "input.npy", zoo_input[0].numpy())
    with torch.no_grad():
        write_npy(zoo_dir / "expected_logits.npy", zoo(zoo_input)[0].numpy())

    captured = {}
    model.block3.register_forward_hook(lambda m, i, o: captured.__setitem__("features", o))

    collection = HERE / "collection"
    stub_table = {}
    specs = [("img_a", 10, 12, "both"), ("img_b", 20, 22, "mask"), ("img_c", 16, 8, "boxes")]
    for stem, cy, cx, ann in specs:
        image = synthetic_image(rng, cy, cx)
        x = torch.from_numpy(image)[None]
        logits = model(x)
        cls = int(logits.argmax())
        feats = captured["features"]
        (grads,) = torch.autograd.grad(logits[0, cls], feats)
        write_bundle(collection / f"{stem}.bundle", image, feats[0].detach().numpy(),
                     grads[0].numpy(), logits[0].detach().numpy(), cls)
        stub_table[image_hash(image)] = [float(v) for v in logits[0].detach().numpy()]

        y0, y1, x0, x1 = max(cy - 6, 0), min(cy + 6, SIZE), max(cx - 6, 0), min(cx + 6, SIZE)
        if ann in ("both", "mask"):
            background = 0 if cls != 0 else 1
            mask = np.full((SIZE, SIZE), background, dtype=np.uint8)
            mask[y0:y1, x0:x1] = cls
            mask[y0, x0:x1] = 255
            write_mask_png(collection / f"{stem}.mask.png", mask)
        if ann in ("both", "boxes"):
            boxes = [{"class": cls, "box": [x0, y0, x1, y1]},
                     {"class": cls, "box": [0, 0, 4, 4]}]
            (collection / f"{stem}.boxes.json").write_text(json.dumps(boxes) + "\n")

    stub = {"input_shape": [3, SIZE, SIZE],
            "default": [0.0] * NUM_CLASSES,
            "table": stub_table}
    stub["default"][0] = 0.5
    (HERE / "stub_scorer.json").write_text(json.dumps(stub, indent=2) + "\n")

    config = {
        "methods": ["gradcam", "guided"],
        "collection": "collection",
        "scorer": "stub_scorer.json",
        "seed": 7,
        "workers": 2,
        "postprocess": {"smoothing_sigma": 1.0, "smoothing_kernel": 5},
        "metrics": {"tau": 0.5, "steps": 16, "curves": True,
                    "insertion_blur_sigma": 10.0},
    }
    (HERE / "evaluate_config.json").write_text(json.dumps(config, indent=2) + "\n")


if __name__ == "__main__":
    main()
