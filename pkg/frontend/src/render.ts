/**
 * Immediate-mode scene rendering.
 *
 * renderScene is a pure function from the view model to a flat list of draw
 * commands, which makes frames snapshot-testable; an adapter elsewhere
 * replays the commands onto a canvas 2D context.
 */
import { ModificationKind } from "./protocol.js";
import { ConsoleViewModel, canConfirm } from "./viewmodel.js";

export const PREFERRED_COLOR = "#2e9e4f"; // green
export const ALTERNATE_COLOR = "#d99a26"; // amber
export const SELECTED_OUTLINE = "#1d4ed8";

/** One fixed icon per parameter kind, shown beside each candidate. */
export const BADGE_ICONS: Record<ModificationKind, string> = {
  regular_road: "road",
  bus_driveway: "bus",
  parking_area: "parking",
  sidewalk: "pedestrian",
  off_road: "terrain",
  solid_line_crossing: "dashed-line",
};

export type DrawCommand =
  | { kind: "placeholder"; status: string }
  | { kind: "polygon"; id: number; points: [number, number][]; hatched: boolean }
  | { kind: "grid_cells"; cells: [number, number][]; cellSize: number }
  | { kind: "vehicle"; pose: [number, number, number] }
  | {
      kind: "path";
      candidateId: number;
      points: [number, number][];
      color: string;
      selected: boolean;
    }
  | {
      kind: "badge";
      candidateId: number;
      icon: string;
      label: ModificationKind;
      acknowledged: boolean;
    }
  | { kind: "confirm_button"; enabled: boolean; tooltip: string | null }
  | { kind: "banner"; severity: "alert" | "error"; text: string };

export function renderScene(view: ConsoleViewModel): DrawCommand[] {
  if (view.scene === null) {
    return [{ kind: "placeholder", status: view.connection }];
  }
  const commands: DrawCommand[] = [];

  for (const lanelet of view.scene.lanelets) {
    const ring = [...lanelet.left, ...[...lanelet.right].reverse()];
    commands.push({
      kind: "polygon",
      id: lanelet.id,
      points: ring as [number, number][],
      hatched: lanelet.blocked,
    });
  }
  commands.push({
    kind: "grid_cells",
    cells: view.scene.occupied_cells as [number, number][],
    cellSize: view.scene.cell_size,
  });
  commands.push({ kind: "vehicle", pose: view.scene.vehicle_pose });

  for (const candidate of view.candidates) {
    commands.push({
      kind: "path",
      candidateId: candidate.id,
      points: candidate.polyline.map(([x, y]) => [x, y] as [number, number]),
      color: candidate.preferred ? PREFERRED_COLOR : ALTERNATE_COLOR,
      selected: candidate.id === view.selectedId,
    });
    for (const mod of candidate.odd_modifications) {
      commands.push({
        kind: "badge",
        candidateId: candidate.id,
        icon: BADGE_ICONS[mod],
        label: mod,
        acknowledged:
          candidate.id === view.selectedId && view.acknowledgedMods.has(mod),
      });
    }
  }

  const confirmable = canConfirm(view);
  commands.push({
    kind: "confirm_button",
    enabled: confirmable,
    tooltip: confirmable ? null : confirmTooltip(view),
  });

  if (view.sessionState === "mrm") {
    commands.push({
      kind: "banner",
      severity: "alert",
      text: "Vehicle performing minimal risk maneuver",
    });
  }
  if (view.lastError !== null) {
    commands.push({
      kind: "banner",
      severity: "error",
      text: `Request rejected: ${view.lastError}`,
    });
  }
  return commands;
}

function confirmTooltip(view: ConsoleViewModel): string {
  if (view.pending) return "Waiting for the vehicle to answer";
  if (view.selectedId === null) return "Select a path candidate first";
  return "Acknowledge every parameter modification to confirm";
}
