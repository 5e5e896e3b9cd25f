import * as fs from 'node:fs'
import * as path from 'node:path'
import { PNG } from 'pngjs'

import { encodePpm, type Raster } from '../src/image.js'
import { Rng } from '../src/prng.js'

/** Smooth, non-constant test image (seeded gradients + noise). */
export function syntheticRaster(width: number, height: number, seed: number): Raster {
  const rng = new Rng(seed)
  const fx = rng.uniform(0.5, 3)
  const fy = rng.uniform(0.5, 3)
  const data = new Float64Array(width * height * 3)
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const u = x / width
      const v = y / height
      const base = (y * width + x) * 3
      data[base] = 0.5 + 0.45 * Math.sin(2 * Math.PI * fx * u)
      data[base + 1] = 0.5 + 0.45 * Math.cos(2 * Math.PI * fy * v)
      data[base + 2] = 0.25 + 0.5 * u * v
    }
  }
  return { width, height, data }
}

export function writePng(file: string, img: Raster): void {
  const png = new PNG({ width: img.width, height: img.height })
  for (let i = 0; i < img.width * img.height; i++) {
    png.data[i * 4] = Math.round(img.data[i * 3] * 255)
    png.data[i * 4 + 1] = Math.round(img.data[i * 3 + 1] * 255)
    png.data[i * 4 + 2] = Math.round(img.data[i * 3 + 2] * 255)
    png.data[i * 4 + 3] = 255
  }
  fs.writeFileSync(file, PNG.sync.write(png))
}

export function writePpm(file: string, img: Raster): void {
  fs.writeFileSync(file, encodePpm(img))
}

/** Two-class toy image folder: cats/ with 2 images, dogs/ with 1. */
export function makeToyDataset(root: string): void {
  const cats = path.join(root, 'cats')
  const dogs = path.join(root, 'dogs')
  fs.mkdirSync(cats, { recursive: true })
  fs.mkdirSync(dogs, { recursive: true })
  writePng(path.join(cats, 'a.png'), syntheticRaster(64, 48, 1))
  writePpm(path.join(cats, 'b.ppm'), syntheticRaster(80, 80, 2))
  writePng(path.join(dogs, 'c.png'), syntheticRaster(48, 64, 3))
}

export const TEST_BACKBONE = {
  imageSize: 32,
  patch: 16,
  width: 16,
  depth: 1,
  heads: 2,
  weightSeed: 7,
}
