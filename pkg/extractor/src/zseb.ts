/**
 * ZSEB binary matrix format, bit-compatible with the Python engine.
 *
 * Layout (little-endian):
 *   "ZSEB" | u16 version=1 | u16 flags (bit 0 = normalized) |
 *   u64 rows | u32 dim | rows*dim float32 row-major | CRC-32 of payload
 */

import { readFileSync, writeFileSync } from 'node:fs'

const MAGIC = Buffer.from('ZSEB', 'ascii')
const VERSION = 1
const FLAG_NORMALIZED = 0x0001
const HEADER_SIZE = 20

export interface EmbeddingMatrix {
  rows: number
  dim: number
  /** row-major, length rows*dim */
  data: Float32Array
  normalized: boolean
}

export class ZsebError extends Error {}

// standard CRC-32 (IEEE 802.3 polynomial, reflected)
const CRC_TABLE = (() => {
  const table = new Uint32Array(256)
  for (let n = 0; n < 256; n++) {
    let c = n
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1
    }
    table[n] = c
  }
  return table
})()

export function crc32(buf: Buffer): number {
  let c = 0xffffffff
  for (let i = 0; i < buf.length; i++) {
    c = CRC_TABLE[(c ^ buf[i]) & 0xff] ^ (c >>> 8)
  }
  return (c ^ 0xffffffff) >>> 0
}

function validate(m: EmbeddingMatrix): void {
  if (m.rows < 1 || m.dim < 1) {
    throw new ZsebError(`matrix must be non-empty, got ${m.rows}x${m.dim}`)
  }
  if (m.data.length !== m.rows * m.dim) {
    throw new ZsebError(
      `data length ${m.data.length} != rows*dim ${m.rows * m.dim}`,
    )
  }
  for (let i = 0; i < m.data.length; i++) {
    if (!Number.isFinite(m.data[i])) {
      throw new ZsebError(`non-finite entry at index ${i}`)
    }
  }
  if (m.normalized) {
    for (let r = 0; r < m.rows; r++) {
      let sq = 0
      for (let j = 0; j < m.dim; j++) {
        const v = m.data[r * m.dim + j]
        sq += v * v
      }
      if (Math.abs(Math.sqrt(sq) - 1) > 1e-5) {
        throw new ZsebError(`row ${r} flagged normalized but has norm ${Math.sqrt(sq)}`)
      }
    }
  }
}

export function encodeMatrix(m: EmbeddingMatrix): Buffer {
  validate(m)
  const header = Buffer.alloc(HEADER_SIZE)
  MAGIC.copy(header, 0)
  header.writeUInt16LE(VERSION, 4)
  header.writeUInt16LE(m.normalized ? FLAG_NORMALIZED : 0, 6)
  header.writeBigUInt64LE(BigInt(m.rows), 8)
  header.writeUInt32LE(m.dim, 16)
  const payload = Buffer.alloc(m.data.length * 4)
  for (let i = 0; i < m.data.length; i++) {
    payload.writeFloatLE(m.data[i], i * 4)
  }
  const crc = Buffer.alloc(4)
  crc.writeUInt32LE(crc32(payload), 0)
  return Buffer.concat([header, payload, crc])
}

export function writeMatrix(m: EmbeddingMatrix, path: string): void {
  writeFileSync(path, encodeMatrix(m))
}

export function readMatrix(path: string): EmbeddingMatrix {
  const raw = readFileSync(path)
  if (raw.length < 4 || !raw.subarray(0, 4).equals(MAGIC)) {
    throw new ZsebError(`${path}: not a ZSEB file`)
  }
  if (raw.length < HEADER_SIZE) {
    throw new ZsebError(`${path}: truncated header`)
  }
  const version = raw.readUInt16LE(4)
  if (version !== VERSION) {
    throw new ZsebError(`${path}: unsupported version ${version}`)
  }
  const flags = raw.readUInt16LE(6)
  if ((flags & ~FLAG_NORMALIZED) !== 0) {
    throw new ZsebError(`${path}: unknown flag bits`)
  }
  const rows = Number(raw.readBigUInt64LE(8))
  const dim = raw.readUInt32LE(16)
  const expected = HEADER_SIZE + rows * dim * 4 + 4
  if (raw.length !== expected) {
    throw new ZsebError(`${path}: size ${raw.length}, expected ${expected}`)
  }
  const payload = raw.subarray(HEADER_SIZE, raw.length - 4)
  if (crc32(payload) !== raw.readUInt32LE(raw.length - 4)) {
    throw new ZsebError(`${path}: CRC mismatch`)
  }
  const data = new Float32Array(rows * dim)
  for (let i = 0; i < data.length; i++) {
    data[i] = payload.readFloatLE(i * 4)
  }
  const m: EmbeddingMatrix = {
    rows,
    dim,
    data,
    normalized: (flags & FLAG_NORMALIZED) !== 0,
  }
  validate(m)
  return m
}
