#!/usr/bin/env python3
# Copyright 2026 The clrprune Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates the bundled architecture files under data/archs/.

Usage: python3 tools/gen_archs.py [output_dir]
"""

import json
import os
import sys


class Builder:
    def __init__(self, name, input_shape):
        self.name = name
        self.input_shape = input_shape
        self.layers = []
        self.edges = []

    def _add(self, layer, inputs, edge_kind="sequential"):
        layer["id"] = len(self.layers)
        self.layers.append(layer)
        for src in inputs:
            self.edges.append({"from": src, "to": layer["id"], "kind": edge_kind})
        return layer["id"]

    def conv(self, name, src, cin, cout, k, stride=1, pad=0, bias=False):
        inputs = [] if src is None else [src]
        return self._add({"name": name, "kind": "conv", "in_channels": cin,
                          "out_channels": cout, "kernel": [k, k],
                          "stride": stride, "padding": pad, "bias": bias}, inputs)

    def bn(self, name, src):
        return self._add({"name": name, "kind": "batchnorm"}, [src])

    def relu(self, name, src):
        return self._add({"name": name, "kind": "activation"}, [src])

    def pool(self, name, src, k, stride, pad=0):
        return self._add({"name": name, "kind": "pool", "kernel": [k, k],
                          "stride": stride, "padding": pad}, [src])

    def fc(self, name, src, cin, cout):
        return self._add({"name": name, "kind": "fully-connected",
                          "in_channels": cin, "out_channels": cout,
                          "bias": True}, [src])

    def add(self, name, srcs):
        return self._add({"name": name, "kind": "add"}, srcs, "residual-add")

    def concat(self, name, srcs):
        return self._add({"name": name, "kind": "concat"}, srcs, "concat")

    def conv_bn_relu(self, name, src, cin, cout, k, stride=1, pad=0, bias=False):
        c = self.conv(name, src, cin, cout, k, stride, pad, bias)
        b = self.bn(name + ".bn", c)
        return self.relu(name + ".relu", b)

    def dump(self):
        return {"name": self.name, "input_shape": self.input_shape,
                "layers": self.layers, "edges": self.edges}


def vgg16_cifar():
    cfg = [64, 64, "M", 128, 128, "M", 256, 256, 256, "M",
           512, 512, 512, "M", 512, 512, 512]
    b = Builder("vgg16-cifar10", [3, 32, 32])
    src, cin, idx, pools = None, 3, 0, 0
    for v in cfg:
        if v == "M":
            pools += 1
            src = b.pool("pool%d" % pools, src, 2, 2)
            continue
        idx += 1
        src = b.conv_bn_relu("conv%d" % idx, src, cin, v, 3, 1, 1, bias=True)
        cin = v
    src = b.pool("pool5", src, 2, 2)
    b.fc("classifier", src, 512, 10)
    return b.dump()


def resnet_cifar(depth):
    blocks = (depth - 2) // 6
    b = Builder("resnet%d-cifar10" % depth, [3, 32, 32])
    src = b.conv_bn_relu("conv1", None, 3, 16, 3, 1, 1)
    cin = 16
    for stage, width in enumerate([16, 32, 64], start=1):
        for blk in range(blocks):
            stride = 2 if (stage > 1 and blk == 0) else 1
            prefix = "layer%d.%d" % (stage, blk)
            h = b.conv_bn_relu(prefix + ".conv1", src, cin, width, 3, stride, 1)
            h = b.conv(prefix + ".conv2", h, width, width, 3, 1, 1)
            h = b.bn(prefix + ".conv2.bn", h)
            shortcut = src
            if stride != 1 or cin != width:
                shortcut = b.conv(prefix + ".downsample", src, cin, width, 1, stride, 0)
                shortcut = b.bn(prefix + ".downsample.bn", shortcut)
            s = b.add(prefix + ".add", [h, shortcut])
            src = b.relu(prefix + ".relu", s)
            cin = width
    src = b.pool("avgpool", src, 8, 8)
    b.fc("fc", src, 64, 10)
    return b.dump()


def resnet50_imagenet():
    b = Builder("resnet50-imagenet", [3, 224, 224])
    src = b.conv_bn_relu("conv1", None, 3, 64, 7, 2, 3)
    src = b.pool("maxpool", src, 3, 2, 1)
    cin = 64
    for stage, (width, blocks) in enumerate([(64, 3), (128, 4), (256, 6), (512, 3)], start=1):
        out = width * 4
        for blk in range(blocks):
            stride = 2 if (stage > 1 and blk == 0) else 1
            prefix = "layer%d.%d" % (stage, blk)
            h = b.conv_bn_relu(prefix + ".conv1", src, cin, width, 1)
            h = b.conv_bn_relu(prefix + ".conv2", h, width, width, 3, stride, 1)
            h = b.conv(prefix + ".conv3", h, width, out, 1)
            h = b.bn(prefix + ".conv3.bn", h)
            shortcut = src
            if blk == 0:
                shortcut = b.conv(prefix + ".downsample", src, cin, out, 1, stride, 0)
                shortcut = b.bn(prefix + ".downsample.bn", shortcut)
            s = b.add(prefix + ".add", [h, shortcut])
            src = b.relu(prefix + ".relu", s)
            cin = out
    src = b.pool("avgpool", src, 7, 7)
    b.fc("fc", src, 2048, 1000)
    return b.dump()


def googlenet_cifar():
    b = Builder("googlenet-cifar10", [3, 32, 32])
    src = b.conv_bn_relu("pre", None, 3, 192, 3, 1, 1, bias=True)

    def inception(name, src, cin, n1, n3r, n3, n5r, n5, pp):
        b1 = b.conv_bn_relu(name + ".b1", src, cin, n1, 1, bias=True)
        b2 = b.conv_bn_relu(name + ".b2.reduce", src, cin, n3r, 1, bias=True)
        b2 = b.conv_bn_relu(name + ".b2.conv", b2, n3r, n3, 3, 1, 1, bias=True)
        b3 = b.conv_bn_relu(name + ".b3.reduce", src, cin, n5r, 1, bias=True)
        b3 = b.conv_bn_relu(name + ".b3.conv1", b3, n5r, n5, 3, 1, 1, bias=True)
        b3 = b.conv_bn_relu(name + ".b3.conv2", b3, n5, n5, 3, 1, 1, bias=True)
        b4 = b.pool(name + ".b4.pool", src, 3, 1, 1)
        b4 = b.conv_bn_relu(name + ".b4.proj", b4, cin, pp, 1, bias=True)
        return b.concat(name + ".concat", [b1, b2, b3, b4]), n1 + n3 + n5 + pp

    src, c = inception("a3", src, 192, 64, 96, 128, 16, 32, 32)
    src, c = inception("b3", src, c, 128, 128, 192, 32, 96, 64)
    src = b.pool("maxpool1", src, 3, 2, 1)
    src, c = inception("a4", src, c, 192, 96, 208, 16, 48, 64)
    src, c = inception("b4", src, c, 160, 112, 224, 24, 64, 64)
    src, c = inception("c4", src, c, 128, 128, 256, 24, 64, 64)
    src, c = inception("d4", src, c, 112, 144, 288, 32, 64, 64)
    src, c = inception("e4", src, c, 256, 160, 320, 32, 128, 128)
    src = b.pool("maxpool2", src, 3, 2, 1)
    src, c = inception("a5", src, c, 256, 160, 320, 32, 128, 128)
    src, c = inception("b5", src, c, 384, 192, 384, 48, 128, 128)
    src = b.pool("avgpool", src, 8, 1)
    b.fc("linear", src, c, 10)
    return b.dump()


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
        os.path.dirname(os.path.abspath(__file__)), "..", "data", "archs")
    os.makedirs(out, exist_ok=True)
    specs = {
        "vgg16_cifar10.json": vgg16_cifar(),
        "resnet56_cifar10.json": resnet_cifar(56),
        "resnet110_cifar10.json": resnet_cifar(110),
        "resnet50_imagenet.json": resnet50_imagenet(),
        "googlenet_cifar10.json": googlenet_cifar(),
    }
    for fname, spec in specs.items():
        with open(os.path.join(out, fname), "w") as f:
            json.dump(spec, f, indent=1)
            f.write("\n")


if __name__ == "__main__":
    main()
