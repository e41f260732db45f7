import { execFileSync } from 'node:child_process'
import { mkdtempSync, rmSync, writeFileSync } from 'node:fs'
import { tmpdir } from 'node:os'
import { join } from 'node:path'

/**
 * Bindings over the `tubeval` CLI. Every number in a returned report comes
 * straight out of the CLI's JSON output; this layer does no arithmetic of
 * its own, so binding results are bit-identical to direct CLI runs.
 */

/** A document crosses the boundary either as inline text or as a file path. */
export type Document = { text: string } | { path: string }

export interface EvalOptions {
  viouThresholds?: number[]
  frameApThreshold?: number
  videoApThreshold?: number
  numSlots?: number
  buckets?: string[]
  jobs?: number
  checkOracle?: boolean
}

export interface MatchedPair {
  tubelet_id: string
  slot: number
  viou: number
  tiou: number
}

export interface Report {
  tool: { name: string; version: string }
  config: Record<string, unknown>
  overall: Record<string, unknown>
  buckets: Record<string, Record<string, Record<string, unknown>>>
  instances: Record<string, { bucket: Record<string, string>; pairs: MatchedPair[] }>
}

export interface DiagnosticEntry {
  instance_id: string
  rule: string
  message: string
}

export class ParseError extends Error {
  constructor(message: string) {
    super(message)
    this.name = 'ParseError'
  }
}

export class ValidationError extends Error {
  constructor(
    message: string,
    public diagnostics: { errors: DiagnosticEntry[]; warnings: DiagnosticEntry[] }
  ) {
    super(message)
    this.name = 'ValidationError'
  }
}

export class OracleMismatchError extends Error {
  constructor(message: string) {
    super(message)
    this.name = 'OracleMismatchError'
  }
}

function python(): string {
  return process.env.TUBEVAL_PYTHON ?? 'python3'
}

function runCli(args: string[]): string {
  try {
    return execFileSync(python(), ['-m', 'tubeval', ...args], {
      encoding: 'utf-8',
      maxBuffer: 256 * 1024 * 1024,
    })
  } catch (err) {
    const failure = err as { status?: number; stderr?: string; message: string }
    let payload: {
      error?: string
      message?: string
      diagnostics?: { errors: DiagnosticEntry[]; warnings: DiagnosticEntry[] }
    } = {}
    try {
      payload = JSON.parse(failure.stderr ?? '')
    } catch {
      // stderr was not machine-readable; fall through with the raw message
    }
    const message = payload.message ?? failure.message
    if (failure.status === 2) throw new ParseError(message)
    if (failure.status === 1) {
      throw new ValidationError(
        message,
        payload.diagnostics ?? { errors: [], warnings: [] }
      )
    }
    if (failure.status === 3) throw new OracleMismatchError(message)
    throw err
  }
}

function materialize(doc: Document, dir: string, name: string): string {
  if ('path' in doc) return doc.path
  const path = join(dir, name)
  writeFileSync(path, doc.text, 'utf-8')
  return path
}

function optionArgs(options: EvalOptions): string[] {
  const args: string[] = []
  if (options.viouThresholds) {
    args.push('--viou-thresholds', options.viouThresholds.join(','))
  }
  if (options.frameApThreshold !== undefined) {
    args.push('--frame-ap-threshold', String(options.frameApThreshold))
  }
  if (options.videoApThreshold !== undefined) {
    args.push('--video-ap-threshold', String(options.videoApThreshold))
  }
  if (options.numSlots !== undefined) args.push('--num-slots', String(options.numSlots))
  if (options.buckets) args.push('--buckets', options.buckets.join(','))
  if (options.jobs !== undefined) args.push('--jobs', String(options.jobs))
  if (options.checkOracle) args.push('--check-oracle')
  return args
}

/** Evaluate a prediction document against ground truth; returns the CLI's report. */
export function evaluate(
  groundTruth: Document,
  predictions: Document,
  options: EvalOptions = {}
): Report {
  const dir = mkdtempSync(join(tmpdir(), 'tubeval-'))
  try {
    const gtPath = materialize(groundTruth, dir, 'gt.json')
    const predPath = materialize(predictions, dir, 'pred.json')
    const stdout = runCli([
      'evaluate',
      '--gt',
      gtPath,
      '--pred',
      predPath,
      '--format',
      'json',
      ...optionArgs(options),
    ])
    return JSON.parse(stdout) as Report
  } finally {
    rmSync(dir, { recursive: true, force: true })
  }
}

export interface InstanceMapping {
  instance_id: string
  video_id?: string
  description?: string
  entity_count?: number
  frame_count?: number
  tubelets: Array<{
    tubelet_id: string
    category: string
    boxes: Record<string, number[]>
  }>
}

export interface PredictionMapping {
  tubelets: Array<{
    slot: number
    frames: Record<string, { box: number[]; state_probs: number[] }>
  }>
}

function maxFrame(instance: InstanceMapping, predictions: PredictionMapping): number {
  let max = 0
  for (const t of instance.tubelets) {
    for (const key of Object.keys(t.boxes)) max = Math.max(max, Number(key))
  }
  for (const t of predictions.tubelets) {
    for (const key of Object.keys(t.frames)) max = Math.max(max, Number(key))
  }
  return max
}

/**
 * Match one instance's predictions to its ground-truth tubelets. Wraps both
 * mappings into single-instance documents and reads the matched pairs from
 * the CLI report's per-instance diagnostics; no matching logic lives here.
 */
export function matchTubelets(
  instance: InstanceMapping,
  predictions: PredictionMapping,
  options: EvalOptions = {}
): MatchedPair[] {
  const videoId = instance.video_id ?? 'video'
  const frameCount = instance.frame_count ?? maxFrame(instance, predictions) + 1
  const gt = {
    videos: [
      { video_id: videoId, width: 640, height: 360, fps: 24.0, frame_count: frameCount },
    ],
    instances: [
      {
        instance_id: instance.instance_id,
        video_id: videoId,
        description: instance.description ?? '',
        ...(instance.entity_count !== undefined
          ? { entity_count: instance.entity_count }
          : {}),
        tubelets: instance.tubelets,
      },
    ],
  }
  const pred = {
    predictions: [
      { instance_id: instance.instance_id, tubelets: predictions.tubelets },
    ],
  }
  const report = evaluate(
    { text: JSON.stringify(gt) },
    { text: JSON.stringify(pred) },
    options
  )
  return report.instances[instance.instance_id].pairs
}

/** Version of the underlying evaluation tool. */
export function version(): string {
  return execFileSync(python(), ['-m', 'tubeval', '--version'], {
    encoding: 'utf-8',
  }).trim()
}
