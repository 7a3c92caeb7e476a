#!/usr/bin/env node
// Builds a balanced MNIST subset in IDX format from the `mnist` npm package
// (which ships the digit images as JSON, normalized to [0,1]).
//
// Usage: npm install mnist && node scripts/make_mnist_subset.js <mnist-pkg-src> <outdir>
//
// Output: train-images-idx3-ubyte / train-labels-idx1-ubyte (500 per class)
//         t10k-images-idx3-ubyte  / t10k-labels-idx1-ubyte  (200 per class)

const fs = require('fs');
const path = require('path');

const srcDir = process.argv[2];
const outDir = process.argv[3];
if (!srcDir || !outDir) {
  console.error('usage: make_mnist_subset.js <mnist-pkg-src> <outdir>');
  process.exit(1);
}

const SIZE = 28;
const PIXELS = SIZE * SIZE;
const TRAIN_PER_CLASS = 500;
const TEST_PER_CLASS = 200;

function writeIdxImages(file, images) {
  const header = Buffer.alloc(16);
  header.writeUInt32BE(0x00000803, 0);
  header.writeUInt32BE(images.length, 4);
  header.writeUInt32BE(SIZE, 8);
  header.writeUInt32BE(SIZE, 12);
  const body = Buffer.alloc(images.length * PIXELS);
  images.forEach((img, i) => {
    for (let p = 0; p < PIXELS; p++) {
      body[i * PIXELS + p] = Math.max(0, Math.min(255, Math.round(img[p] * 255)));
    }
  });
  fs.writeFileSync(file, Buffer.concat([header, body]));
}

function writeIdxLabels(file, labels) {
  const header = Buffer.alloc(8);
  header.writeUInt32BE(0x00000801, 0);
  header.writeUInt32BE(labels.length, 4);
  fs.writeFileSync(file, Buffer.concat([header, Buffer.from(labels)]));
}

// Deterministic shuffle so classes are interleaved in file order.
function lcgShuffle(arr, seed) {
  let s = BigInt(seed);
  const next = () => {
    s = (s * 6364136223846793005n + 1442695040888963407n) & 0xffffffffffffffffn;
    return Number(s >> 33n) / 0x80000000;
  };
  for (let i = arr.length - 1; i > 0; i--) {
    const j = Math.floor(next() * (i + 1));
    [arr[i], arr[j]] = [arr[j], arr[i]];
  }
}

const train = [];
const test = [];
for (let digit = 0; digit <= 9; digit++) {
  const raw = require(path.join(srcDir, 'digits', `${digit}.json`)).data;
  const count = raw.length / PIXELS;
  if (count < TRAIN_PER_CLASS + TEST_PER_CLASS) {
    console.error(`digit ${digit}: only ${count} images`);
    process.exit(1);
  }
  for (let i = 0; i < TRAIN_PER_CLASS; i++) {
    train.push({ label: digit, img: raw.slice(i * PIXELS, (i + 1) * PIXELS) });
  }
  for (let i = TRAIN_PER_CLASS; i < TRAIN_PER_CLASS + TEST_PER_CLASS; i++) {
    test.push({ label: digit, img: raw.slice(i * PIXELS, (i + 1) * PIXELS) });
  }
}
lcgShuffle(train, 12345);
lcgShuffle(test, 54321);

fs.mkdirSync(outDir, { recursive: true });
writeIdxImages(path.join(outDir, 'train-images-idx3-ubyte'), train.map(s => s.img));
writeIdxLabels(path.join(outDir, 'train-labels-idx1-ubyte'), train.map(s => s.label));
writeIdxImages(path.join(outDir, 't10k-images-idx3-ubyte'), test.map(s => s.img));
writeIdxLabels(path.join(outDir, 't10k-labels-idx1-ubyte'), test.map(s => s.label));
console.log(`wrote ${train.length} train / ${test.length} test images to ${outDir}`);
