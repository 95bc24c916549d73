// Spreadsheet-compatible quartiles (QUARTILE.INC semantics: linear
// interpolation between order statistics at h = (n - 1) q).

export interface BoxStats {
    n: number;
    min: number;
    q1: number;
    median: number;
    q3: number;
    max: number;
}

export function quantileInc(sorted: number[], q: number): number {
    if (sorted.length === 0) {
        throw new Error("quantile of an empty sample");
    }
    if (q < 0 || q > 1) {
        throw new Error(`quantile fraction out of range: ${q}`);
    }
    const h = (sorted.length - 1) * q;
    const lo = Math.floor(h);
    const frac = h - lo;
    if (frac === 0) {
        return sorted[lo];
    }
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

export function boxStats(values: number[]): BoxStats | null {
    if (values.length === 0) {
        return null;
    }
    const sorted = [...values].sort((a, b) => a - b);
    return {
        n: sorted.length,
        min: sorted[0],
        q1: quantileInc(sorted, 0.25),
        median: quantileInc(sorted, 0.5),
        q3: quantileInc(sorted, 0.75),
        max: sorted[sorted.length - 1],
    };
}
