import { describe, expect, it } from 'vitest'

import { decodeEmbeddings, encodeEmbeddings, MAGIC } from '../src/format.js'

function tinyFile() {
  return {
    dH: 2,
    tokens: 3,
    records: [
      { label: 4, base: Float32Array.from([1, 2, 3, 4, 5, 6]), augmented: null },
      {
        label: 9,
        base: Float32Array.from([0.5, -1, 2, -2.5, 3, 0]),
        augmented: Float32Array.from([9, 8, 7, 6, 5, 4]),
      },
    ],
  }
}

describe('g2gemb1 codec', () => {
  it('writes the exact header layout', () => {
    const buf = encodeEmbeddings(tinyFile())
    expect(buf.subarray(0, 8).toString('latin1')).toBe(MAGIC)
    expect(buf.readUInt32LE(8)).toBe(1)      // version
    expect(buf.readUInt32LE(12)).toBe(2)     // d_h
    expect(buf.readUInt32LE(16)).toBe(3)     // L
    expect(Number(buf.readBigUInt64LE(20))).toBe(2)
    expect(buf.readUInt32LE(28)).toBe(4)     // first label
    expect(buf.readUInt8(32)).toBe(0)        // has_aug
    expect(buf.readFloatLE(33)).toBeCloseTo(1, 6)
    expect(buf.length).toBe(28 + (5 + 24) + (5 + 48))
  })

  it('round-trips records and augmented payloads', () => {
    const file = tinyFile()
    const back = decodeEmbeddings(encodeEmbeddings(file))
    expect(back.dH).toBe(2)
    expect(back.tokens).toBe(3)
    expect(back.records.length).toBe(2)
    expect(back.records[0].augmented).toBeNull()
    expect(Array.from(back.records[1].augmented!)).toEqual([9, 8, 7, 6, 5, 4])
    expect(Array.from(back.records[1].base)).toEqual(
      Array.from(file.records[1].base))
    expect(back.records.map((r) => r.label)).toEqual([4, 9])
  })

  it('rejects corruption', () => {
    const buf = encodeEmbeddings(tinyFile())
    expect(() => decodeEmbeddings(buf.subarray(0, buf.length - 3))).toThrow(/truncated/)
    const junk = Buffer.from(buf)
    junk.write('XXXXXXXX', 0, 'latin1')
    expect(() => decodeEmbeddings(junk)).toThrow(/magic/)
    const wrongVersion = Buffer.from(buf)
    wrongVersion.writeUInt32LE(3, 8)
    expect(() => decodeEmbeddings(wrongVersion)).toThrow(/version 3/)
  })
})
