// Results-table schema shared with the simulation engine. The analysis reads
// only this CSV; nothing else crosses the boundary.

export const RESULT_COLUMNS = [
    "experiment_id", "strategy", "planner", "env_kind", "r_c", "r_f",
    "seed", "converged", "correct", "convergence_time",
    "mean_estimate", "median_estimate_error",
] as const;

export interface ResultRow {
    experimentId: string;
    strategy: string;
    planner: string;
    envKind: string;
    rC: number;
    rF: number;
    seed: number;
    converged: boolean;
    correct: boolean;
    convergenceTime: number | null;
    meanEstimate: number;
    medianEstimateError: number;
}

/** A row is flagged when the swarm failed to converge or converged wrongly. */
export function flagged(row: ResultRow): boolean {
    return !(row.converged && row.correct);
}

export function parseResultsCsv(text: string): ResultRow[] {
    const lines = text.split(/\r?\n/).filter(line => line.length > 0);
    if (lines.length === 0) {
        throw new Error("results file is empty");
    }
    const header = lines[0].split(",");
    if (header.length !== RESULT_COLUMNS.length ||
        !RESULT_COLUMNS.every((c, i) => header[i] === c)) {
        throw new Error(
            `unexpected results schema: ${lines[0]} ` +
            `(expected ${RESULT_COLUMNS.join(",")})`);
    }
    return lines.slice(1).map((line, idx) => {
        const parts = line.split(",");
        if (parts.length !== RESULT_COLUMNS.length) {
            throw new Error(`row ${idx + 2}: expected ` +
                `${RESULT_COLUMNS.length} fields, got ${parts.length}`);
        }
        const num = (field: string, name: string): number => {
            const v = Number(field);
            if (field === "" || Number.isNaN(v) && field !== "nan") {
                throw new Error(`row ${idx + 2}: bad ${name}: ${field}`);
            }
            return v;
        };
        const flag = (field: string, name: string): boolean => {
            if (field !== "true" && field !== "false") {
                throw new Error(`row ${idx + 2}: bad ${name}: ${field}`);
            }
            return field === "true";
        };
        return {
            experimentId: parts[0],
            strategy: parts[1],
            planner: parts[2],
            envKind: parts[3],
            rC: num(parts[4], "r_c"),
            rF: num(parts[5], "r_f"),
            seed: num(parts[6], "seed"),
            converged: flag(parts[7], "converged"),
            correct: flag(parts[8], "correct"),
            convergenceTime: parts[9] === "" ? null : num(parts[9], "convergence_time"),
            meanEstimate: num(parts[10], "mean_estimate"),
            medianEstimateError: num(parts[11], "median_estimate_error"),
        };
    });
}
