// SVG beeswarm on the consensus..divisive axis. The horizontal position is
// a fixed linear map of the API's beeswarm_x from [-1, +1] onto the pixel
// range; point size maps extremity. Raw values are kept on data-
// attributes so every rendered number is traceable to a response field.

import type { SwarmPoint } from "./viewmodel.js";

export interface SwarmLayout {
  width: number;
  height: number;
  pad: number;
  minRadius: number;
  radiusPerExtremity: number;
}

export const DEFAULT_LAYOUT: SwarmLayout = {
  width: 640,
  height: 180,
  pad: 24,
  minRadius: 5,
  radiusPerExtremity: 14,
};

export function pixelX(x: number, layout: SwarmLayout = DEFAULT_LAYOUT): number {
  return layout.pad + ((x + 1) / 2) * (layout.width - 2 * layout.pad);
}

export function pointRadius(extremity: number, layout: SwarmLayout = DEFAULT_LAYOUT): number {
  return layout.minRadius + extremity * layout.radiusPerExtremity;
}

/** Greedy vertical stacking so overlapping points stay visible. */
function stackOffsets(points: SwarmPoint[], layout: SwarmLayout): number[] {
  const placed: { px: number; r: number; row: number }[] = [];
  const offsets: number[] = [];
  for (const point of points) {
    const px = pixelX(point.x, layout);
    const r = pointRadius(point.extremity, layout);
    let row = 0;
    const collides = (candidate: number) =>
      placed.some(
        (other) => other.row === candidate && Math.abs(other.px - px) < other.r + r + 2,
      );
    while (collides(row)) {
      row = row >= 0 ? -(row + 1) : -row;
    }
    placed.push({ px, r, row });
    offsets.push(row);
  }
  return offsets;
}

export interface SwarmHover {
  (point: SwarmPoint | null): void;
}

export function renderBeeswarm(
  container: HTMLElement,
  points: SwarmPoint[],
  onHover?: SwarmHover,
  layout: SwarmLayout = DEFAULT_LAYOUT,
): SVGSVGElement {
  const svgNs = "http://www.w3.org/2000/svg";
  const doc = container.ownerDocument;
  const svg = doc.createElementNS(svgNs, "svg");
  svg.setAttribute("viewBox", `0 0 ${layout.width} ${layout.height}`);
  svg.setAttribute("class", "beeswarm");

  const axisY = layout.height / 2;
  const axis = doc.createElementNS(svgNs, "line");
  axis.setAttribute("x1", String(layout.pad));
  axis.setAttribute("x2", String(layout.width - layout.pad));
  axis.setAttribute("y1", String(axisY));
  axis.setAttribute("y2", String(axisY));
  axis.setAttribute("class", "beeswarm-axis");
  svg.appendChild(axis);

  for (const [label, x] of [
    ["divisive", -1],
    ["neutral", 0],
    ["consensus", 1],
  ] as const) {
    const text = doc.createElementNS(svgNs, "text");
    text.setAttribute("x", String(pixelX(x, layout)));
    text.setAttribute("y", String(layout.height - 6));
    text.setAttribute("text-anchor", "middle");
    text.setAttribute("class", "beeswarm-label");
    text.textContent = label;
    svg.appendChild(text);
  }

  const offsets = stackOffsets(points, layout);
  points.forEach((point, i) => {
    const r = pointRadius(point.extremity, layout);
    const circle = doc.createElementNS(svgNs, "circle");
    circle.setAttribute("cx", String(pixelX(point.x, layout)));
    circle.setAttribute("cy", String(axisY + offsets[i] * (2 * layout.minRadius + 6)));
    circle.setAttribute("r", String(r));
    circle.setAttribute("class", "beeswarm-point");
    circle.setAttribute("data-statement", point.statement);
    circle.setAttribute("data-x", String(point.x));
    circle.setAttribute("data-extremity", String(point.extremity));
    circle.setAttribute("data-score", String(point.score));
    if (onHover) {
      circle.addEventListener("mouseenter", () => onHover(point));
      circle.addEventListener("mouseleave", () => onHover(null));
    }
    svg.appendChild(circle);
  });

  container.replaceChildren(svg);
  return svg;
}
