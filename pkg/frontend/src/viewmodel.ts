/**
 * Console state and the operations the operator can perform on it.
 *
 * The view model is plain data; every operation returns a new model so the
 * renderer can stay a pure function of it. Outgoing frames are produced
 * here and validated against the protocol schema before they leave.
 */
import {
  Candidate,
  ModificationKind,
  Scene,
  SequenceCounter,
  WireMessage,
  encodeFrame,
} from "./protocol.js";

export type ConnectionStatus =
  | "connecting"
  | "connected"
  | "closed"
  | "reconnecting";

export interface ConsoleViewModel {
  connection: ConnectionStatus;
  sessionId: string;
  scene: Scene | null;
  candidates: Candidate[];
  selectedId: number | null;
  acknowledgedMods: Set<ModificationKind>;
  sessionState: string;
  /** Input locked while a confirm is in flight. */
  pending: boolean;
  /** Machine-readable reason from the last server rejection, if any. */
  lastError: string | null;
  timeoutS: number | null;
}

export function initialViewModel(sessionId: string): ConsoleViewModel {
  return {
    connection: "connecting",
    sessionId,
    scene: null,
    candidates: [],
    selectedId: null,
    acknowledgedMods: new Set(),
    sessionState: "idle",
    pending: false,
    lastError: null,
    timeoutS: null,
  };
}

export function selectedCandidate(view: ConsoleViewModel): Candidate | null {
  if (view.selectedId === null) return null;
  return view.candidates.find((c) => c.id === view.selectedId) ?? null;
}

/** Confirm is allowed only with a selection whose every modification has
 * been explicitly acknowledged. */
export function canConfirm(view: ConsoleViewModel): boolean {
  const candidate = selectedCandidate(view);
  if (candidate === null || view.pending) return false;
  return candidate.odd_modifications.every((m) =>
    view.acknowledgedMods.has(m),
  );
}

/** Apply one validated inbound frame to the model. */
export function applyMessage(
  view: ConsoleViewModel,
  message: WireMessage,
): ConsoleViewModel {
  switch (message.type) {
    case "hello":
      return { ...view, connection: "connected" };
    case "scene_snapshot":
      return { ...view, scene: message.payload as Scene };
    case "assistance_request": {
      const payload = message.payload as {
        candidates: Candidate[];
        scene: Scene;
        timeout_s: number;
      };
      const preferred = payload.candidates.find((c) => c.preferred);
      return {
        ...view,
        scene: payload.scene,
        candidates: payload.candidates,
        selectedId: preferred ? preferred.id : payload.candidates[0].id,
        acknowledgedMods: new Set(),
        sessionState: "awaiting_operator",
        pending: false,
        lastError: null,
        timeoutS: payload.timeout_s,
      };
    }
    case "state_update": {
      const payload = message.payload as { state: string };
      return { ...view, sessionState: payload.state, pending: false };
    }
    case "error": {
      const payload = message.payload as { reason: string };
      // a rejection re-opens the request; the reason is surfaced in a banner
      return { ...view, pending: false, lastError: payload.reason };
    }
    case "bye":
      return { ...view, connection: "closed" };
    default:
      return view;
  }
}

/** Cyclic selection change, driven by arrow keys. */
export function cycleSelection(
  view: ConsoleViewModel,
  direction: "next" | "previous",
): ConsoleViewModel {
  if (view.candidates.length === 0 || view.pending) return view;
  const ids = view.candidates.map((c) => c.id);
  const at = view.selectedId === null ? 0 : ids.indexOf(view.selectedId);
  const step = direction === "next" ? 1 : -1;
  const selectedId = ids[(at + step + ids.length) % ids.length];
  return { ...view, selectedId, acknowledgedMods: new Set() };
}

/** Direct selection, driven by pointer clicks on a drawn path. */
export function selectCandidate(
  view: ConsoleViewModel,
  id: number,
): ConsoleViewModel {
  if (view.pending) return view;
  if (!view.candidates.some((c) => c.id === id)) return view;
  if (id === view.selectedId) return view;
  return { ...view, selectedId: id, acknowledgedMods: new Set() };
}

export function toggleAcknowledgement(
  view: ConsoleViewModel,
  mod: ModificationKind,
): ConsoleViewModel {
  if (view.pending) return view;
  const acknowledgedMods = new Set(view.acknowledgedMods);
  if (acknowledgedMods.has(mod)) acknowledgedMods.delete(mod);
  else acknowledgedMods.add(mod);
  return { ...view, acknowledgedMods };
}

export interface Outgoing {
  view: ConsoleViewModel;
  frame: string;
}

/** Emit a selection preview so other observers can mirror the cursor. */
export function previewSelection(
  view: ConsoleViewModel,
  seq: SequenceCounter,
): Outgoing | null {
  if (view.selectedId === null) return null;
  const frame = encodeFrame({
    type: "selection_preview",
    session_id: view.sessionId,
    seq: seq.take(),
    payload: { candidate_id: view.selectedId },
  });
  return { view, frame };
}

/**
 * Emit the assistance response for the current selection and lock input
 * until the server answers with a state_update or an error.
 */
export function confirmSelection(
  view: ConsoleViewModel,
  seq: SequenceCounter,
): Outgoing {
  if (!canConfirm(view)) {
    throw new Error("confirm requires a fully acknowledged selection");
  }
  const candidate = selectedCandidate(view)!;
  const frame = encodeFrame({
    type: "assistance_response",
    session_id: view.sessionId,
    seq: seq.take(),
    payload: {
      candidate_id: candidate.id,
      approved_modifications: [...candidate.odd_modifications].sort(),
      operator_id: "console",
    },
  });
  return { view: { ...view, pending: true, lastError: null }, frame };
}
