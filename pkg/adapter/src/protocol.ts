/** reachcast/1 message shapes and request validation. */

export const PROTOCOL = 'reachcast/1';
export const TRACE_LEN = 64;
export const N_DIRECTIONS = 8;

export interface Target {
  dir: number;
  count: number;
}

export interface ForecastRequest {
  id: number;
  subject_id: string;
  context: number[][];
  context_dirs: number[];
  targets: Target[];
  pool_size: number;
  seed: number;
}

export interface PoolResponse {
  id: number;
  pools: Record<string, number[][]>;
}

export interface ErrorResponse {
  id: number;
  error: string;
}

function isFiniteArray(row: unknown): row is number[] {
  return Array.isArray(row) && row.length === TRACE_LEN && row.every((v) => Number.isFinite(v));
}

/** Returns an error message for malformed requests, null when valid. */
export function validateRequest(msg: unknown): string | null {
  if (typeof msg !== 'object' || msg === null) return 'request must be a JSON object';
  const req = msg as Partial<ForecastRequest>;
  if (!Number.isInteger(req.id)) return 'missing integer id';
  if (typeof req.subject_id !== 'string') return 'missing subject_id';
  if (!Array.isArray(req.context) || req.context.length === 0) return 'missing context';
  if (!req.context.every(isFiniteArray)) return `context rows must be ${TRACE_LEN} finite floats`;
  if (
    !Array.isArray(req.context_dirs) ||
    req.context_dirs.length !== req.context.length ||
    !req.context_dirs.every((d) => Number.isInteger(d) && d >= 0 && d < N_DIRECTIONS)
  ) {
    return 'context_dirs must hold one direction code (0..7) per context row';
  }
  if (!Array.isArray(req.targets) || req.targets.length === 0) return 'missing targets';
  for (const target of req.targets) {
    if (
      typeof target !== 'object' ||
      target === null ||
      !Number.isInteger(target.dir) ||
      target.dir < 0 ||
      target.dir >= N_DIRECTIONS ||
      !Number.isInteger(target.count) ||
      target.count < 1
    ) {
      return 'targets must be {dir: 0..7, count >= 1} objects';
    }
  }
  if (!Number.isInteger(req.pool_size) || (req.pool_size as number) < 1) {
    return 'pool_size must be >= 1';
  }
  if (!Number.isInteger(req.seed)) return 'seed must be an integer';
  return null;
}
