export {
  MODIFICATION_KINDS,
  SequenceCounter,
  decodeFrame,
  encodeFrame,
} from "./protocol.js";
export type {
  Candidate,
  MessageType,
  ModificationKind,
  Scene,
  WireMessage,
} from "./protocol.js";
export {
  applyMessage,
  canConfirm,
  confirmSelection,
  cycleSelection,
  initialViewModel,
  previewSelection,
  selectCandidate,
  selectedCandidate,
  toggleAcknowledgement,
} from "./viewmodel.js";
export type { ConnectionStatus, ConsoleViewModel, Outgoing } from "./viewmodel.js";
export { BADGE_ICONS, renderScene } from "./render.js";
export type { DrawCommand } from "./render.js";
