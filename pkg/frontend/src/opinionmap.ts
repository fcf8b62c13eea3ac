// SVG scatter of participant projections, colored by opinion group, with
// the viewer's own point highlighted.

import type { MapPoint } from "./viewmodel.js";

const GROUP_COLORS = [
  "#4c78a8",
  "#f58518",
  "#54a24b",
  "#e45756",
  "#72b7b2",
  "#b279a2",
];

export function groupColor(group: number): string {
  return GROUP_COLORS[group % GROUP_COLORS.length];
}

export interface MapLayout {
  width: number;
  height: number;
  pad: number;
}

export const MAP_LAYOUT: MapLayout = { width: 420, height: 320, pad: 20 };

export function renderOpinionMap(
  container: HTMLElement,
  points: MapPoint[],
  layout: MapLayout = MAP_LAYOUT,
): SVGSVGElement {
  const svgNs = "http://www.w3.org/2000/svg";
  const doc = container.ownerDocument;
  const svg = doc.createElementNS(svgNs, "svg");
  svg.setAttribute("viewBox", `0 0 ${layout.width} ${layout.height}`);
  svg.setAttribute("class", "opinion-map");

  if (points.length) {
    const xs = points.map((p) => p.x);
    const ys = points.map((p) => p.y);
    const xMin = Math.min(...xs);
    const xMax = Math.max(...xs);
    const yMin = Math.min(...ys);
    const yMax = Math.max(...ys);
    const sx = (x: number) =>
      layout.pad +
      (xMax === xMin ? 0.5 : (x - xMin) / (xMax - xMin)) * (layout.width - 2 * layout.pad);
    const sy = (y: number) =>
      layout.pad +
      (yMax === yMin ? 0.5 : (y - yMin) / (yMax - yMin)) * (layout.height - 2 * layout.pad);

    for (const point of points) {
      const circle = doc.createElementNS(svgNs, "circle");
      circle.setAttribute("cx", String(sx(point.x)));
      circle.setAttribute("cy", String(sy(point.y)));
      circle.setAttribute("r", point.self ? "7" : "4");
      circle.setAttribute("fill", groupColor(point.group));
      circle.setAttribute("class", point.self ? "map-point self" : "map-point");
      circle.setAttribute("data-participant", point.id);
      circle.setAttribute("data-group", String(point.group));
      if (point.self) {
        circle.setAttribute("stroke", "#222");
        circle.setAttribute("stroke-width", "2");
      }
      svg.appendChild(circle);
    }
  }
  container.replaceChildren(svg);
  return svg;
}
