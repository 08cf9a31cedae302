/** Planner bindings: validated configuration plus plan() over the CLI.
 *
 * The planner shells out to `python -m lgttp plan`, feeding embeddings
 * through the LGTE container format and reading the plan JSON back, so
 * every number it returns is exactly what the CLI prints.  Input buffers
 * are only read for the duration of the call; results are materialized
 * copies.  Set LGTTP_PYTHON to pick the interpreter (default python3).
 */

import { execFileSync } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { BindingError, invalidInput } from "./errors.js";
import { writeLgte } from "./lgte.js";

export { BindingError } from "./errors.js";
export { readLgte, writeLgte, type LgteContent } from "./lgte.js";

/** Kept in lockstep with the core library's version string. */
export const VERSION = "0.1.0";

export type AdaptationMode = "timestamp" | "position" | "adapter";

/** Mirrors the planner config JSON document; every key optional. */
export interface PlannerConfigInit {
  alpha?: number;
  t_full?: number;
  t_min_fraction?: number;
  t_min?: number; // derived; accepted and ignored, like the CLI
  lambda?: number;
  mode?: AdaptationMode;
  cost_mu?: number;
  seed?: number;
}

export interface PlannerOptions {
  /** Checkpoint file for position/adapter modes. */
  paramsPath?: string;
  /** Run position/adapter modes with freshly initialized parameters. */
  untrained?: boolean;
}

export interface Cue {
  category: "precedence" | "subsequence" | "cooccurrence";
  marker: string;
  marker_span: [number, number];
  reference_event: string | null;
  source: "explicit" | "implicit";
}

export interface PlanCost {
  retained_tokens: number;
  full_tokens: number;
  token_ratio: number;
  attention_ratio: number;
  relative_flops_percent: number;
  mu: number;
}

export interface PlanConfigEcho {
  alpha: number;
  t_full: number;
  t_min_fraction: number;
  t_min: number;
  lambda: number;
  mode: AdaptationMode;
  cost_mu: number;
  seed: number;
}

export interface Plan {
  query_id: string;
  cues: Cue[];
  weights: number[];
  l_base: number[];
  l_temp: number[];
  raw_rates: number[];
  rates: number[];
  budgets: number[];
  kept_tokens: number[][];
  cost: PlanCost;
  config: PlanConfigEcho;
  version: string;
}

const MODES: readonly string[] = ["timestamp", "position", "adapter"];
const CONFIG_KEYS: readonly string[] = [
  "alpha",
  "t_full",
  "t_min_fraction",
  "t_min",
  "lambda",
  "mode",
  "cost_mu",
  "seed",
];

interface ResolvedConfig {
  alpha: number;
  t_full: number;
  t_min_fraction: number;
  lambda: number;
  mode: AdaptationMode;
  cost_mu: number;
  seed: number;
}

function resolveConfig(init: PlannerConfigInit): ResolvedConfig {
  for (const key of Object.keys(init)) {
    if (!CONFIG_KEYS.includes(key)) {
      throw invalidInput(`unknown config key: ${key}`);
    }
  }
  const cfg: ResolvedConfig = {
    alpha: init.alpha ?? 0.65,
    t_full: init.t_full ?? 256,
    t_min_fraction: init.t_min_fraction ?? 0.1,
    lambda: init.lambda ?? 2.0,
    mode: init.mode ?? "timestamp",
    cost_mu: init.cost_mu ?? 0.5,
    seed: init.seed ?? 0,
  };
  if (!Number.isFinite(cfg.alpha) || cfg.alpha <= 0 || cfg.alpha >= 1) {
    throw invalidInput(`alpha must lie strictly between 0 and 1, got ${cfg.alpha}`);
  }
  if (!Number.isInteger(cfg.t_full) || cfg.t_full < 1) {
    throw invalidInput(`t_full must be a positive integer, got ${cfg.t_full}`);
  }
  if (!Number.isFinite(cfg.t_min_fraction) || cfg.t_min_fraction < 0 || cfg.t_min_fraction > 1) {
    throw invalidInput(`t_min_fraction must lie in [0, 1], got ${cfg.t_min_fraction}`);
  }
  if (!Number.isFinite(cfg.lambda) || cfg.lambda <= 0) {
    throw invalidInput(`lambda must be positive, got ${cfg.lambda}`);
  }
  if (!MODES.includes(cfg.mode)) {
    throw invalidInput(`mode must be one of ${MODES.join(", ")}, got ${cfg.mode}`);
  }
  if (!Number.isFinite(cfg.cost_mu) || cfg.cost_mu < 0 || cfg.cost_mu > 1) {
    throw invalidInput(`cost_mu must lie in [0, 1], got ${cfg.cost_mu}`);
  }
  if (!Number.isInteger(cfg.seed)) {
    throw invalidInput(`seed must be an integer, got ${cfg.seed}`);
  }
  return cfg;
}

function pythonInterpreter(): string {
  return process.env.LGTTP_PYTHON ?? "python3";
}

function runCli(args: string[]): string {
  try {
    return execFileSync(pythonInterpreter(), ["-m", "lgttp", ...args], {
      encoding: "utf-8",
      stdio: ["ignore", "pipe", "pipe"],
    });
  } catch (err) {
    const failure = err as { status?: number | null; stderr?: string; message?: string };
    const stderr = failure.stderr ?? "";
    const match = /error \[([a-z-]+)\]: (.*)/.exec(stderr);
    if (match) {
      throw new BindingError(match[1], match[2].trim(), failure.status ?? null);
    }
    throw new BindingError(
      "internal",
      `lgttp CLI failed (exit ${failure.status ?? "?"}): ${stderr || failure.message}`,
      failure.status ?? null,
    );
  }
}

export class BoundPlanner {
  readonly config: Readonly<ResolvedConfig>;
  private readonly options: PlannerOptions;
  private closed = false;

  constructor(init: PlannerConfigInit = {}, options: PlannerOptions = {}) {
    if (options.paramsPath && options.untrained) {
      throw invalidInput("paramsPath and untrained are mutually exclusive");
    }
    this.config = Object.freeze(resolveConfig(init));
    this.options = { ...options };
  }

  /** Build a plan for one query over one clip.
   *
   * `frames` is a row-major nFrames x dim float32 buffer.  Without a
   * `queryEmbedding` the CLI synthesizes one from the query text
   * (deterministic in config.seed).
   */
  plan(
    query: string,
    frames: Float32Array,
    nFrames: number,
    dim: number,
    queryEmbedding: Float32Array | null = null,
  ): Plan {
    if (this.closed) {
      throw invalidInput("planner is closed");
    }
    const workDir = mkdtempSync(join(tmpdir(), "lgttp-bind-"));
    try {
      const clipPath = join(workDir, "clip.lgte");
      writeLgte(clipPath, frames, nFrames, dim, queryEmbedding);
      const configPath = join(workDir, "config.json");
      writeFileSync(configPath, JSON.stringify(this.config));
      const args = [
        "plan",
        "--query",
        query,
        "--embeddings",
        clipPath,
        "--config",
        configPath,
      ];
      if (queryEmbedding === null) args.push("--embed-query");
      if (this.options.paramsPath) args.push("--params", this.options.paramsPath);
      if (this.options.untrained) args.push("--untrained");
      return JSON.parse(runCli(args)) as Plan;
    } finally {
      rmSync(workDir, { recursive: true, force: true });
    }
  }

  /** Release the handle; subsequent plan() calls are rejected. */
  close(): void {
    this.closed = true;
  }
}

export function createPlanner(
  init: PlannerConfigInit = {},
  options: PlannerOptions = {},
): BoundPlanner {
  return new BoundPlanner(init, options);
}
