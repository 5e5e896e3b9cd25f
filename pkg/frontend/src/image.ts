/** Image decoding (PNG, JPEG, PPM) and float RGB raster operations. */

import { PNG } from 'pngjs'
import jpeg from 'jpeg-js'

import type { Rng } from './prng.js'

/** RGB raster, values in [0, 1], layout (y * width + x) * 3 + channel. */
export interface Raster {
  width: number
  height: number
  data: Float64Array
}

export function decodeImage(buffer: Buffer, filename: string): Raster {
  const lower = filename.toLowerCase()
  if (lower.endsWith('.png')) return fromRgba(PNG.sync.read(buffer))
  if (lower.endsWith('.jpg') || lower.endsWith('.jpeg')) {
    return fromRgba(jpeg.decode(buffer, { useTArray: true }))
  }
  if (lower.endsWith('.ppm')) return decodePpm(buffer)
  throw new Error(`unsupported image format: ${filename}`)
}

function fromRgba(img: { width: number; height: number; data: Uint8Array | Buffer }): Raster {
  const { width, height, data } = img
  const out = new Float64Array(width * height * 3)
  for (let i = 0; i < width * height; i++) {
    out[i * 3] = data[i * 4] / 255
    out[i * 3 + 1] = data[i * 4 + 1] / 255
    out[i * 3 + 2] = data[i * 4 + 2] / 255
  }
  return { width, height, data: out }
}

/** Binary PPM (P6, maxval 255). */
export function decodePpm(buffer: Buffer): Raster {
  let pos = 0
  const token = (): string => {
    while (pos < buffer.length && /\s/.test(String.fromCharCode(buffer[pos]))) pos++
    if (buffer[pos] === 0x23) { // comment
      while (pos < buffer.length && buffer[pos] !== 0x0a) pos++
      return token()
    }
    const start = pos
    while (pos < buffer.length && !/\s/.test(String.fromCharCode(buffer[pos]))) pos++
    return buffer.subarray(start, pos).toString('ascii')
  }
  if (token() !== 'P6') throw new Error('not a binary PPM (P6) file')
  const width = parseInt(token(), 10)
  const height = parseInt(token(), 10)
  const maxval = parseInt(token(), 10)
  if (!(width > 0 && height > 0) || maxval !== 255) {
    throw new Error('bad PPM header')
  }
  pos++ // single whitespace after maxval
  const need = width * height * 3
  if (buffer.length - pos < need) throw new Error('truncated PPM payload')
  const out = new Float64Array(need)
  for (let i = 0; i < need; i++) out[i] = buffer[pos + i] / 255
  return { width, height, data: out }
}

export function encodePpm(img: Raster): Buffer {
  const header = Buffer.from(`P6\n${img.width} ${img.height}\n255\n`, 'ascii')
  const body = Buffer.alloc(img.width * img.height * 3)
  for (let i = 0; i < body.length; i++) {
    body[i] = Math.max(0, Math.min(255, Math.round(img.data[i] * 255)))
  }
  return Buffer.concat([header, body])
}

/** Bilinear resize. */
export function resize(img: Raster, width: number, height: number): Raster {
  const out = new Float64Array(width * height * 3)
  const sx = img.width / width
  const sy = img.height / height
  for (let y = 0; y < height; y++) {
    const fy = Math.min((y + 0.5) * sy - 0.5, img.height - 1)
    const y0 = Math.max(0, Math.floor(fy))
    const y1 = Math.min(img.height - 1, y0 + 1)
    const wy = Math.max(0, fy - y0)
    for (let x = 0; x < width; x++) {
      const fx = Math.min((x + 0.5) * sx - 0.5, img.width - 1)
      const x0 = Math.max(0, Math.floor(fx))
      const x1 = Math.min(img.width - 1, x0 + 1)
      const wx = Math.max(0, fx - x0)
      for (let c = 0; c < 3; c++) {
        const a = img.data[(y0 * img.width + x0) * 3 + c]
        const b = img.data[(y0 * img.width + x1) * 3 + c]
        const d = img.data[(y1 * img.width + x0) * 3 + c]
        const e = img.data[(y1 * img.width + x1) * 3 + c]
        out[(y * width + x) * 3 + c] =
          a * (1 - wx) * (1 - wy) + b * wx * (1 - wy) +
          d * (1 - wx) * wy + e * wx * wy
      }
    }
  }
  return { width, height, data: out }
}

export function crop(img: Raster, x0: number, y0: number, w: number, h: number): Raster {
  const out = new Float64Array(w * h * 3)
  for (let y = 0; y < h; y++) {
    for (let x = 0; x < w; x++) {
      for (let c = 0; c < 3; c++) {
        out[(y * w + x) * 3 + c] = img.data[((y0 + y) * img.width + x0 + x) * 3 + c]
      }
    }
  }
  return { width: w, height: h, data: out }
}

export function hflip(img: Raster): Raster {
  const out = new Float64Array(img.data.length)
  for (let y = 0; y < img.height; y++) {
    for (let x = 0; x < img.width; x++) {
      for (let c = 0; c < 3; c++) {
        out[(y * img.width + x) * 3 + c] =
          img.data[(y * img.width + (img.width - 1 - x)) * 3 + c]
      }
    }
  }
  return { width: img.width, height: img.height, data: out }
}

/** Random resized crop + horizontal flip; always crops strictly inside. */
export function augment(img: Raster, rng: Rng, target: number): Raster {
  const scale = rng.uniform(0.7, 0.95)
  const ratio = rng.uniform(3 / 4, 4 / 3)
  const area = img.width * img.height * scale
  let w = Math.round(Math.sqrt(area * ratio))
  let h = Math.round(Math.sqrt(area / ratio))
  w = Math.max(1, Math.min(w, img.width - 1))
  h = Math.max(1, Math.min(h, img.height - 1))
  const x0 = rng.int(img.width - w + 1)
  const y0 = rng.int(img.height - h + 1)
  let out = resize(crop(img, x0, y0, w, h), target, target)
  if (rng.bool()) out = hflip(out)
  return out
}
