/** Exclusion-polygon drawing: click to add vertices, close with >= 3,
 * cancel to discard. Finished polygons are sent to the service verbatim
 * (full-resolution pixel coordinates); the service decides what they exclude. */

export type Vertex = [number, number];

export class PolygonDraft {
  private vertices: Vertex[] = [];

  get active(): boolean {
    return this.vertices.length > 0;
  }

  get points(): readonly Vertex[] {
    return this.vertices;
  }

  addVertex(x: number, y: number): void {
    this.vertices.push([x, y]);
  }

  get canClose(): boolean {
    return this.vertices.length >= 3;
  }

  /** Finish the polygon; throws if it has fewer than three vertices. */
  close(): Vertex[] {
    if (!this.canClose) {
      throw new Error("a polygon needs at least three vertices");
    }
    const done = this.vertices;
    this.vertices = [];
    return done;
  }

  cancel(): void {
    this.vertices = [];
  }
}

/** A rectangle covering the entire FOV — "exclude everything" shortcut. */
export function wholeFramePolygon(width: number, height: number): Vertex[] {
  return [
    [0, 0],
    [width - 1, 0],
    [width - 1, height - 1],
    [0, height - 1],
  ];
}
