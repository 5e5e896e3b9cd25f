/** G2GEMB1 binary embedding file: writer and reader.
 *
 * Layout (little-endian): magic "G2GEMB1\0", u32 version=1, u32 d_h, u32 L,
 * u64 record count, then per record u32 label, u8 has_aug, f32[d_h*L] base
 * feature (row-major d_h x L), f32[d_h*L] augmented feature when present.
 */

export const MAGIC = 'G2GEMB1\0'
export const VERSION = 1

export interface EmbeddingRecord {
  label: number
  base: Float32Array
  augmented: Float32Array | null
}

export interface EmbeddingFile {
  dH: number
  tokens: number
  records: EmbeddingRecord[]
}

export function encodeEmbeddings(file: EmbeddingFile): Buffer {
  const featBytes = file.dH * file.tokens * 4
  let total = 8 + 4 + 4 + 4 + 8
  for (const rec of file.records) {
    total += 5 + featBytes * (rec.augmented ? 2 : 1)
  }
  const buf = Buffer.alloc(total)
  buf.write(MAGIC, 0, 'latin1')
  let off = 8
  off = buf.writeUInt32LE(VERSION, off)
  off = buf.writeUInt32LE(file.dH, off)
  off = buf.writeUInt32LE(file.tokens, off)
  off = buf.writeBigUInt64LE(BigInt(file.records.length), off)
  for (const rec of file.records) {
    if (rec.base.length !== file.dH * file.tokens) {
      throw new Error(`record feature length ${rec.base.length} != ${file.dH * file.tokens}`)
    }
    off = buf.writeUInt32LE(rec.label, off)
    off = buf.writeUInt8(rec.augmented ? 1 : 0, off)
    off = writeF32(buf, off, rec.base)
    if (rec.augmented) off = writeF32(buf, off, rec.augmented)
  }
  return buf
}

function writeF32(buf: Buffer, off: number, values: Float32Array): number {
  for (let i = 0; i < values.length; i++) {
    off = buf.writeFloatLE(values[i], off)
  }
  return off
}

export function decodeEmbeddings(buf: Buffer): EmbeddingFile {
  if (buf.subarray(0, 8).toString('latin1') !== MAGIC) {
    throw new Error('bad magic; not a G2GEMB1 file')
  }
  const version = buf.readUInt32LE(8)
  if (version !== VERSION) {
    throw new Error(`unsupported version ${version}, expected ${VERSION}`)
  }
  const dH = buf.readUInt32LE(12)
  const tokens = buf.readUInt32LE(16)
  const count = Number(buf.readBigUInt64LE(20))
  const featLen = dH * tokens
  const records: EmbeddingRecord[] = []
  let off = 28
  for (let r = 0; r < count; r++) {
    if (off + 5 > buf.length) throw new Error('truncated record header')
    const label = buf.readUInt32LE(off)
    const hasAug = buf.readUInt8(off + 4)
    off += 5
    const need = featLen * 4 * (hasAug ? 2 : 1)
    if (off + need > buf.length) throw new Error('truncated record payload')
    const base = readF32(buf, off, featLen)
    off += featLen * 4
    let augmented: Float32Array | null = null
    if (hasAug) {
      augmented = readF32(buf, off, featLen)
      off += featLen * 4
    }
    records.push({ label, base, augmented })
  }
  if (off !== buf.length) throw new Error(`${buf.length - off} trailing bytes`)
  return { dH, tokens, records }
}

function readF32(buf: Buffer, off: number, count: number): Float32Array {
  const out = new Float32Array(count)
  for (let i = 0; i < count; i++) out[i] = buf.readFloatLE(off + i * 4)
  return out
}
