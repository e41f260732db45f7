import { execFileSync } from 'node:child_process'
import { mkdtempSync, readFileSync, rmSync } from 'node:fs'
import { tmpdir } from 'node:os'
import { join } from 'node:path'
import { afterAll, beforeAll, describe, expect, it } from 'vitest'

import {
  evaluate,
  matchTubelets,
  ParseError,
  ValidationError,
  version,
  type Report,
} from '../src/index.js'

const PYTHON = process.env.TUBEVAL_PYTHON ?? 'python3'

let dir: string

function cli(args: string[]): string {
  return execFileSync(PYTHON, ['-m', 'tubeval', ...args], {
    encoding: 'utf-8',
    maxBuffer: 256 * 1024 * 1024,
  })
}

function cliReport(gt: string, pred: string): Report {
  return JSON.parse(
    cli(['evaluate', '--gt', gt, '--pred', pred, '--format', 'json'])
  ) as Report
}

beforeAll(() => {
  dir = mkdtempSync(join(tmpdir(), 'tubeval-bindings-'))
  cli([
    'synth',
    '--seed',
    '21',
    '--videos',
    '3',
    '--instances-per-video',
    '6',
    '--box-jitter',
    '0.08',
    '--extent-clip-rate',
    '0.1',
    '--out-dir',
    dir,
  ])
})

afterAll(() => {
  rmSync(dir, { recursive: true, force: true })
})

describe('evaluate parity with the CLI', () => {
  it('matches field-by-field on the perfect fixture (path input)', () => {
    const gt = join(dir, 'ground_truth.json')
    const pred = join(dir, 'predictions_perfect.json')
    const fromBinding = evaluate({ path: gt }, { path: pred })
    expect(fromBinding).toStrictEqual(cliReport(gt, pred))
    expect(fromBinding.overall.m_viou).toBe(1.0)
  })

  it('matches on the corrupted fixture (text input)', () => {
    const gt = join(dir, 'ground_truth.json')
    const pred = join(dir, 'predictions_corrupted.json')
    const fromBinding = evaluate(
      { text: readFileSync(gt, 'utf-8') },
      { text: readFileSync(pred, 'utf-8') }
    )
    expect(fromBinding).toStrictEqual(cliReport(gt, pred))
  })

  it('returns the exact stored m_vIoU on the 1/3-overlap hand fixture', () => {
    const boxes: Record<string, number[]> = {}
    for (let t = 0; t < 4; t++) boxes[String(t)] = [0.5, 0.5, 0.2, 0.2]
    const frames: Record<string, { box: number[]; state_probs: number[] }> = {}
    for (let t = 2; t < 6; t++) {
      frames[String(t)] = { box: [0.5, 0.5, 0.2, 0.2], state_probs: [1, 0, 0] }
    }
    const gt = JSON.stringify({
      videos: [
        { video_id: 'v', width: 640, height: 360, fps: 24.0, frame_count: 10 },
      ],
      instances: [
        {
          instance_id: 'i',
          video_id: 'v',
          description: 'hand fixture',
          tubelets: [{ tubelet_id: 't', category: 'c', boxes }],
        },
      ],
    })
    const pred = JSON.stringify({
      predictions: [{ instance_id: 'i', tubelets: [{ slot: 0, frames }] }],
    })
    const report = evaluate({ text: gt }, { text: pred })
    expect(report.overall.m_viou).toBe(1 / 3)
    expect(report.instances['i'].pairs[0].viou).toBe(1 / 3)
    expect(report.instances['i'].pairs[0].tiou).toBe(1 / 3)
  })
})

describe('structured errors', () => {
  it('raises ParseError on malformed JSON', () => {
    expect(() =>
      evaluate({ text: '{ nope' }, { text: '{"predictions": []}' })
    ).toThrowError(ParseError)
  })

  it('raises ValidationError with diagnostics on rule violations', () => {
    const gt = JSON.stringify({
      videos: [
        { video_id: 'v', width: 640, height: 360, fps: 24.0, frame_count: 5 },
      ],
      instances: [
        {
          instance_id: 'i',
          video_id: 'v',
          description: 'x',
          tubelets: [
            {
              tubelet_id: 't',
              category: 'c',
              boxes: { '0': [1.5, 0.5, 0.2, 0.2] },
            },
          ],
        },
      ],
    })
    try {
      evaluate({ text: gt }, { text: '{"predictions": []}' })
      expect.unreachable('expected a ValidationError')
    } catch (err) {
      expect(err).toBeInstanceOf(ValidationError)
      const diags = (err as ValidationError).diagnostics
      expect(diags.errors.length).toBeGreaterThan(0)
      expect(diags.errors[0].rule).toBe('box-range')
    }
  })
})

describe('matchTubelets', () => {
  const box = [0.5, 0.5, 0.2, 0.2]
  const otherBox = [0.15, 0.15, 0.2, 0.2]

  function tubeletOver(id: string, frames: number[], b: number[]) {
    const boxes: Record<string, number[]> = {}
    for (const t of frames) boxes[String(t)] = b
    return { tubelet_id: id, category: 'object', boxes }
  }

  function slotOver(slot: number, frames: number[], b: number[]) {
    const out: Record<string, { box: number[]; state_probs: number[] }> = {}
    for (const t of frames) out[String(t)] = { box: b, state_probs: [1, 0, 0] }
    return { slot, frames: out }
  }

  it('pairs perfect predictions identically', () => {
    const instance = {
      instance_id: 'i',
      tubelets: [
        tubeletOver('t0', [0, 1, 2], box),
        tubeletOver('t1', [2, 3, 4, 5], otherBox),
      ],
    }
    const predictions = {
      tubelets: [
        slotOver(0, [0, 1, 2], box),
        slotOver(1, [2, 3, 4, 5], otherBox),
      ],
    }
    const pairs = matchTubelets(instance, predictions)
    expect(pairs.map((p) => [p.tubelet_id, p.slot])).toStrictEqual([
      ['t0', 0],
      ['t1', 1],
    ])
    expect(pairs.every((p) => p.viou === 1.0 && p.tiou === 1.0)).toBe(true)
  })

  it('returns an empty list for a zero-tubelet instance', () => {
    const pairs = matchTubelets(
      { instance_id: 'i', tubelets: [] },
      { tubelets: [slotOver(0, [0, 1], box)] }
    )
    expect(pairs).toStrictEqual([])
  })

  it('leaves a decoy slot unpaired', () => {
    const instance = {
      instance_id: 'i',
      tubelets: [
        tubeletOver('t0', [0, 1, 2], box),
        tubeletOver('t1', [0, 1, 2], otherBox),
      ],
    }
    const predictions = {
      tubelets: [
        slotOver(0, [0, 1, 2], box),
        slotOver(1, [0, 1, 2], otherBox),
        slotOver(2, [10, 11, 12, 13], [0.8, 0.8, 0.1, 0.1]),
      ],
    }
    const pairs = matchTubelets(instance, predictions)
    expect(pairs.map((p) => [p.tubelet_id, p.slot])).toStrictEqual([
      ['t0', 0],
      ['t1', 1],
    ])
  })
})

describe('version', () => {
  it('reports the CLI tool version', () => {
    expect(version()).toMatch(/^\d+\.\d+\.\d+$/)
  })
})
