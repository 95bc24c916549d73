import { FigureData } from "./figures.js";
import { boxStats } from "./stats.js";

const PANEL_WIDTH = 280;
const PANEL_HEIGHT = 340;
const MARGIN = { top: 36, right: 14, bottom: 74, left: 64 };

function esc(s: string): string {
    return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function niceTicks(lo: number, hi: number, count = 5): number[] {
    if (hi <= lo) {
        hi = lo + 1;
    }
    const span = hi - lo;
    const step = Math.pow(10, Math.floor(Math.log10(span / count)));
    const candidates = [step, 2 * step, 2.5 * step, 5 * step, 10 * step];
    const chosen = candidates.find(c => span / c <= count) ?? 10 * step;
    const ticks: number[] = [];
    for (let v = Math.ceil(lo / chosen) * chosen; v <= hi + 1e-9; v += chosen) {
        ticks.push(Number(v.toFixed(10)));
    }
    return ticks;
}

/** Render the figure as a standalone SVG document. */
export function renderSvg(fig: FigureData): string {
    const panels = fig.panels;
    const width = MARGIN.left + panels.length * PANEL_WIDTH + MARGIN.right;
    const height = MARGIN.top + PANEL_HEIGHT + MARGIN.bottom;

    const allValues = fig.groups.flatMap(g => g.values);
    let lo = 0;
    let hi = Math.max(...allValues, fig.groundTruth ?? -Infinity, 1e-9);
    if (fig.groundTruth !== null) {
        lo = 0;
        hi = Math.max(hi, 1.0);
    } else {
        hi *= 1.05;
    }
    const y = (v: number) =>
        MARGIN.top + PANEL_HEIGHT * (1 - (v - lo) / (hi - lo));

    const parts: string[] = [];
    parts.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
        `height="${height}" font-family="sans-serif" font-size="12">`);
    parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);

    // y axis
    parts.push(`<line x1="${MARGIN.left}" y1="${MARGIN.top}" ` +
        `x2="${MARGIN.left}" y2="${MARGIN.top + PANEL_HEIGHT}" ` +
        `stroke="black"/>`);
    for (const t of niceTicks(lo, hi)) {
        const ty = y(t);
        parts.push(`<line x1="${MARGIN.left - 4}" y1="${ty}" ` +
            `x2="${MARGIN.left}" y2="${ty}" stroke="black"/>`);
        parts.push(`<text x="${MARGIN.left - 8}" y="${ty + 4}" ` +
            `text-anchor="end">${t}</text>`);
    }
    parts.push(`<text transform="rotate(-90)" ` +
        `x="${-(MARGIN.top + PANEL_HEIGHT / 2)}" y="16" ` +
        `text-anchor="middle">${esc(fig.yLabel)}</text>`);

    panels.forEach((panel, p) => {
        const px0 = MARGIN.left + p * PANEL_WIDTH;
        parts.push(`<text x="${px0 + PANEL_WIDTH / 2}" y="${MARGIN.top - 12}" ` +
            `text-anchor="middle" font-weight="bold">${esc(panel)}</text>`);
        parts.push(`<line x1="${px0}" y1="${MARGIN.top + PANEL_HEIGHT}" ` +
            `x2="${px0 + PANEL_WIDTH}" y2="${MARGIN.top + PANEL_HEIGHT}" ` +
            `stroke="black"/>`);
        if (p > 0) {
            parts.push(`<line x1="${px0}" y1="${MARGIN.top}" x2="${px0}" ` +
                `y2="${MARGIN.top + PANEL_HEIGHT}" stroke="#cccccc"/>`);
        }
        if (fig.groundTruth !== null) {
            const gy = y(fig.groundTruth);
            parts.push(`<line x1="${px0}" y1="${gy}" ` +
                `x2="${px0 + PANEL_WIDTH}" y2="${gy}" stroke="black" ` +
                `stroke-dasharray="6 4"/>`);
        }

        const groups = fig.groups.filter(g => g.panel === panel);
        const slot = PANEL_WIDTH / Math.max(groups.length, 1);
        groups.forEach((g, i) => {
            const cx = px0 + slot * (i + 0.5);
            const boxW = Math.min(34, slot * 0.55);
            const s = boxStats(g.values);
            if (s === null) {
                // annotated gap: the group exists but has nothing to plot
                parts.push(`<text x="${cx}" ` +
                    `y="${MARGIN.top + PANEL_HEIGHT / 2}" ` +
                    `text-anchor="middle" fill="#999999" ` +
                    `font-style="italic">n=0</text>`);
            } else {
                parts.push(`<line x1="${cx}" y1="${y(s.min)}" x2="${cx}" ` +
                    `y2="${y(s.q1)}" stroke="${g.color}"/>`);
                parts.push(`<line x1="${cx}" y1="${y(s.q3)}" x2="${cx}" ` +
                    `y2="${y(s.max)}" stroke="${g.color}"/>`);
                parts.push(`<line x1="${cx - boxW / 4}" y1="${y(s.min)}" ` +
                    `x2="${cx + boxW / 4}" y2="${y(s.min)}" stroke="${g.color}"/>`);
                parts.push(`<line x1="${cx - boxW / 4}" y1="${y(s.max)}" ` +
                    `x2="${cx + boxW / 4}" y2="${y(s.max)}" stroke="${g.color}"/>`);
                parts.push(`<rect x="${cx - boxW / 2}" y="${y(s.q3)}" ` +
                    `width="${boxW}" height="${Math.max(y(s.q1) - y(s.q3), 0.5)}" ` +
                    `fill="${g.color}" fill-opacity="0.35" stroke="${g.color}"/>`);
                parts.push(`<line x1="${cx - boxW / 2}" y1="${y(s.median)}" ` +
                    `x2="${cx + boxW / 2}" y2="${y(s.median)}" ` +
                    `stroke="${g.color}" stroke-width="2"/>`);
            }
            if (g.excluded > 0) {
                parts.push(`<text x="${cx}" ` +
                    `y="${MARGIN.top + PANEL_HEIGHT + 46}" ` +
                    `text-anchor="middle" fill="#999999" font-size="10">` +
                    `-${g.excluded}</text>`);
            }
            const labelLines = g.label.split("\n");
            labelLines.forEach((line, li) => {
                parts.push(`<text x="${cx}" ` +
                    `y="${MARGIN.top + PANEL_HEIGHT + 16 + li * 13}" ` +
                    `text-anchor="middle">${esc(line)}</text>`);
            });
        });
    });
    parts.push("</svg>");
    return parts.join("\n") + "\n";
}
