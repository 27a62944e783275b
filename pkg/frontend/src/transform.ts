// Camera mapping between screen pixels (y down) and world units (y up).

export type Tool = "select" | "draw_wall" | "place_emitter" | "move";

export interface Camera {
  x: number; // world point at the screen origin
  y: number;
  zoom: number; // pixels per world unit, > 0
}

export interface Point { x: number; y: number }

export function worldToScreen(p: Point, cam: Camera): Point {
  return { x: (p.x - cam.x) * cam.zoom, y: (cam.y - p.y) * cam.zoom };
}

export function screenToWorld(p: Point, cam: Camera): Point {
  return { x: cam.x + p.x / cam.zoom, y: cam.y - p.y / cam.zoom };
}

export function panBy(cam: Camera, dxPx: number, dyPx: number): Camera {
  return { ...cam, x: cam.x - dxPx / cam.zoom, y: cam.y + dyPx / cam.zoom };
}

// Zoom about a fixed screen point so the world point under the cursor stays put.
export function zoomAt(cam: Camera, screen: Point, factor: number): Camera {
  const zoom = Math.min(400, Math.max(2, cam.zoom * factor));
  const anchor = screenToWorld(screen, cam);
  return {
    x: anchor.x - screen.x / zoom,
    y: anchor.y + screen.y / zoom,
    zoom,
  };
}
