import { RESULT_COLUMNS } from "../src/schema.js";

export interface RowSpec {
    strategy?: string;
    planner?: string;
    envKind?: string;
    rC?: number;
    rF?: number;
    seed?: number;
    converged?: boolean;
    correct?: boolean;
    convergenceTime?: number | null;
    meanEstimate?: number;
    medianEstimateError?: number;
}

let seedCounter = 1;

export function row(spec: RowSpec = {}): string {
    const s = {
        strategy: "DC",
        planner: "RB",
        envKind: "continuous",
        rC: 0.5,
        rF: 0.65,
        seed: seedCounter++,
        converged: true,
        correct: true,
        convergenceTime: 900 as number | null,
        meanEstimate: 0.65,
        medianEstimateError: 0.01,
        ...spec,
    };
    const id = `syn-${s.strategy}-${s.planner}-${s.envKind}`;
    return [
        id, s.strategy, s.planner, s.envKind, s.rC, s.rF, s.seed,
        s.converged ? "true" : "false", s.correct ? "true" : "false",
        s.convergenceTime === null ? "" : s.convergenceTime,
        s.meanEstimate.toFixed(6), s.medianEstimateError.toFixed(6),
    ].join(",");
}

export function csv(rows: string[]): string {
    return [RESULT_COLUMNS.join(","), ...rows].join("\n") + "\n";
}
