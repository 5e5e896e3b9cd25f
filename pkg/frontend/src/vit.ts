/** Frozen vision-transformer backbone.
 *
 * Standard pre-norm ViT: patch embedding, CLS token, learned positional
 * embeddings, multi-head self-attention blocks, final layer norm. Weights
 * are generated once from a fixed seed, so the backbone is frozen by
 * construction and exports are reproducible without shipping checkpoints.
 * The exporter emits all tokens (no pooling); the consumer averages them.
 */

import type { Raster } from './image.js'
import { Rng } from './prng.js'

export interface BackboneConfig {
  imageSize: number
  patch: number
  width: number
  depth: number
  heads: number
  weightSeed: number
}

export const DEFAULT_BACKBONE: BackboneConfig = {
  imageSize: 224,
  patch: 16,
  width: 64,
  depth: 2,
  heads: 4,
  weightSeed: 0x5eed,
}

interface Block {
  ln1g: Float64Array; ln1b: Float64Array
  wq: Float64Array; bq: Float64Array
  wk: Float64Array; bk: Float64Array
  wv: Float64Array; bv: Float64Array
  wo: Float64Array; bo: Float64Array
  ln2g: Float64Array; ln2b: Float64Array
  wfc1: Float64Array; bfc1: Float64Array
  wfc2: Float64Array; bfc2: Float64Array
}

export class VitBackbone {
  readonly cfg: BackboneConfig
  readonly name: string
  readonly dH: number
  readonly tokens: number
  private readonly patchDim: number
  private readonly wEmbed: Float64Array
  private readonly bEmbed: Float64Array
  private readonly cls: Float64Array
  private readonly pos: Float64Array
  private readonly blocks: Block[]
  private readonly lnFg: Float64Array
  private readonly lnFb: Float64Array

  constructor(cfg: BackboneConfig = DEFAULT_BACKBONE) {
    if (cfg.imageSize % cfg.patch !== 0) {
      throw new Error(`image size ${cfg.imageSize} not divisible by patch ${cfg.patch}`)
    }
    if (cfg.width % cfg.heads !== 0) {
      throw new Error(`width ${cfg.width} not divisible by heads ${cfg.heads}`)
    }
    this.cfg = cfg
    const grid = cfg.imageSize / cfg.patch
    this.tokens = grid * grid + 1
    this.dH = cfg.width
    this.patchDim = cfg.patch * cfg.patch * 3
    this.name = `seeded-vit-p${cfg.patch}-w${cfg.width}-d${cfg.depth}-h${cfg.heads}-s${cfg.weightSeed}`

    const rng = new Rng(cfg.weightSeed)
    const mat = (rows: number, cols: number, std = 0.02): Float64Array => {
      const m = new Float64Array(rows * cols)
      for (let i = 0; i < m.length; i++) m[i] = rng.normal() * std
      return m
    }
    const zeros = (n: number) => new Float64Array(n)
    const onesArr = (n: number) => new Float64Array(n).fill(1)

    const w = cfg.width
    this.wEmbed = mat(w, this.patchDim)
    this.bEmbed = zeros(w)
    this.cls = mat(1, w)
    this.pos = mat(this.tokens, w)
    this.lnFg = onesArr(w)
    this.lnFb = zeros(w)
    this.blocks = []
    for (let l = 0; l < cfg.depth; l++) {
      this.blocks.push({
        ln1g: onesArr(w), ln1b: zeros(w),
        wq: mat(w, w), bq: zeros(w),
        wk: mat(w, w), bk: zeros(w),
        wv: mat(w, w), bv: zeros(w),
        wo: mat(w, w), bo: zeros(w),
        ln2g: onesArr(w), ln2b: zeros(w),
        wfc1: mat(4 * w, w), bfc1: zeros(4 * w),
        wfc2: mat(w, 4 * w), bfc2: zeros(w),
      })
    }
  }

  /** All token features as a row-major (dH, tokens) Float32Array. */
  forward(img: Raster): Float32Array {
    const { imageSize, patch, width, heads } = this.cfg
    if (img.width !== imageSize || img.height !== imageSize) {
      throw new Error(`backbone expects ${imageSize}x${imageSize} input`)
    }
    const grid = imageSize / patch
    const n = this.tokens
    let x: Float64Array = new Float64Array(n * width)

    // CLS + embedded patches + positional embeddings
    for (let d = 0; d < width; d++) x[d] = this.cls[d]
    const pv = new Float64Array(this.patchDim)
    for (let py = 0; py < grid; py++) {
      for (let px = 0; px < grid; px++) {
        let k = 0
        for (let y = 0; y < patch; y++) {
          const row = (py * patch + y) * imageSize
          for (let xx = 0; xx < patch; xx++) {
            const base = (row + px * patch + xx) * 3
            pv[k++] = (img.data[base] - 0.5) / 0.5
            pv[k++] = (img.data[base + 1] - 0.5) / 0.5
            pv[k++] = (img.data[base + 2] - 0.5) / 0.5
          }
        }
        const t = 1 + py * grid + px
        for (let d = 0; d < width; d++) {
          let acc = this.bEmbed[d]
          const wrow = d * this.patchDim
          for (let i = 0; i < this.patchDim; i++) acc += this.wEmbed[wrow + i] * pv[i]
          x[t * width + d] = acc
        }
      }
    }
    for (let t = 0; t < n; t++) {
      for (let d = 0; d < width; d++) x[t * width + d] += this.pos[t * width + d]
    }

    const headDim = width / heads
    const scale = 1 / Math.sqrt(headDim)
    for (const blk of this.blocks) {
      const normed = layerNorm(x, n, width, blk.ln1g, blk.ln1b)
      const q = affine(normed, n, width, blk.wq, blk.bq)
      const k = affine(normed, n, width, blk.wk, blk.bk)
      const v = affine(normed, n, width, blk.wv, blk.bv)
      const attnOut = new Float64Array(n * width)
      const scores = new Float64Array(n)
      for (let h = 0; h < heads; h++) {
        const off = h * headDim
        for (let i = 0; i < n; i++) {
          let maxScore = -Infinity
          for (let j = 0; j < n; j++) {
            let s = 0
            for (let d = 0; d < headDim; d++) {
              s += q[i * width + off + d] * k[j * width + off + d]
            }
            scores[j] = s * scale
            if (scores[j] > maxScore) maxScore = scores[j]
          }
          let denom = 0
          for (let j = 0; j < n; j++) {
            scores[j] = Math.exp(scores[j] - maxScore)
            denom += scores[j]
          }
          for (let j = 0; j < n; j++) {
            const a = scores[j] / denom
            if (a === 0) continue
            for (let d = 0; d < headDim; d++) {
              attnOut[i * width + off + d] += a * v[j * width + off + d]
            }
          }
        }
      }
      const projected = affine(attnOut, n, width, blk.wo, blk.bo)
      for (let i = 0; i < x.length; i++) x[i] += projected[i]

      const normed2 = layerNorm(x, n, width, blk.ln2g, blk.ln2b)
      const hidden = affine(normed2, n, width, blk.wfc1, blk.bfc1, 4 * width)
      for (let i = 0; i < hidden.length; i++) hidden[i] = gelu(hidden[i])
      const mlpOut = affineRect(hidden, n, 4 * width, width, blk.wfc2, blk.bfc2)
      for (let i = 0; i < x.length; i++) x[i] += mlpOut[i]
    }

    x = layerNorm(x, n, width, this.lnFg, this.lnFb)
    // transpose token-major (n, width) -> feature-major (width, n)
    const out = new Float32Array(width * n)
    for (let t = 0; t < n; t++) {
      for (let d = 0; d < width; d++) out[d * n + t] = x[t * width + d]
    }
    return out
  }
}

function gelu(v: number): number {
  return 0.5 * v * (1 + Math.tanh(Math.sqrt(2 / Math.PI) * (v + 0.044715 * v * v * v)))
}

function layerNorm(x: Float64Array, n: number, width: number,
                   gamma: Float64Array, beta: Float64Array): Float64Array {
  const out = new Float64Array(n * width)
  for (let t = 0; t < n; t++) {
    let mean = 0
    for (let d = 0; d < width; d++) mean += x[t * width + d]
    mean /= width
    let variance = 0
    for (let d = 0; d < width; d++) {
      const diff = x[t * width + d] - mean
      variance += diff * diff
    }
    variance /= width
    const inv = 1 / Math.sqrt(variance + 1e-6)
    for (let d = 0; d < width; d++) {
      out[t * width + d] = (x[t * width + d] - mean) * inv * gamma[d] + beta[d]
    }
  }
  return out
}

/** y[t] = W x[t] + b with square W (width x width). */
function affine(x: Float64Array, n: number, width: number,
                w: Float64Array, b: Float64Array, outWidth = width): Float64Array {
  const out = new Float64Array(n * outWidth)
  for (let t = 0; t < n; t++) {
    for (let o = 0; o < outWidth; o++) {
      let acc = b[o]
      const wrow = o * width
      for (let d = 0; d < width; d++) acc += w[wrow + d] * x[t * width + d]
      out[t * outWidth + o] = acc
    }
  }
  return out
}

function affineRect(x: Float64Array, n: number, inWidth: number,
                    outWidth: number, w: Float64Array, b: Float64Array): Float64Array {
  const out = new Float64Array(n * outWidth)
  for (let t = 0; t < n; t++) {
    for (let o = 0; o < outWidth; o++) {
      let acc = b[o]
      const wrow = o * inWidth
      for (let d = 0; d < inWidth; d++) acc += w[wrow + d] * x[t * inWidth + d]
      out[t * outWidth + o] = acc
    }
  }
  return out
}
