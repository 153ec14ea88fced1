import { mkdtempSync, readFileSync, writeFileSync } from 'node:fs'
import { tmpdir } from 'node:os'
import { join } from 'node:path'
import { describe, expect, it } from 'vitest'

import { EmbeddingMatrix, ZsebError, readMatrix, writeMatrix } from '../src/zseb.js'

function tmpFile(name: string): string {
  return join(mkdtempSync(join(tmpdir(), 'zseb-')), name)
}

function randomMatrix(rows: number, dim: number): EmbeddingMatrix {
  const data = new Float32Array(rows * dim)
  for (let i = 0; i < data.length; i++) data[i] = Math.sin(i * 1.7) * 2 - 0.5
  return { rows, dim, data, normalized: false }
}

describe('zseb format', () => {
  it('round-trips bit-identically', () => {
    const path = tmpFile('m.zseb')
    const m = randomMatrix(7, 5)
    writeMatrix(m, path)
    const back = readMatrix(path)
    expect(back.rows).toBe(7)
    expect(back.dim).toBe(5)
    expect(Buffer.from(back.data.buffer)).toEqual(Buffer.from(m.data.buffer))
  })

  it('writes 36 bytes for a single unit row of dim 3', () => {
    const path = tmpFile('unit.zseb')
    writeMatrix(
      { rows: 1, dim: 3, data: new Float32Array([1, 0, 0]), normalized: true },
      path,
    )
    expect(readFileSync(path).length).toBe(36)
  })

  it('rejects non-finite data', () => {
    const path = tmpFile('nan.zseb')
    const data = new Float32Array([NaN, 1])
    expect(() =>
      writeMatrix({ rows: 1, dim: 2, data, normalized: false }, path),
    ).toThrow(ZsebError)
  })

  it('rejects a false normalized flag', () => {
    const path = tmpFile('norm.zseb')
    const data = new Float32Array([3, 4])
    expect(() =>
      writeMatrix({ rows: 1, dim: 2, data, normalized: true }, path),
    ).toThrow(/norm/)
  })

  it('detects payload corruption via CRC', () => {
    const path = tmpFile('crc.zseb')
    writeMatrix(randomMatrix(4, 4), path)
    const raw = Buffer.from(readFileSync(path))
    raw[25] ^= 0xff
    writeFileSync(path, raw)
    expect(() => readMatrix(path)).toThrow(/CRC/)
  })

  it('detects truncation', () => {
    const path = tmpFile('trunc.zseb')
    writeMatrix(randomMatrix(3, 3), path)
    const raw = readFileSync(path)
    writeFileSync(path, raw.subarray(0, raw.length - 3))
    expect(() => readMatrix(path)).toThrow(/size/)
  })
})
