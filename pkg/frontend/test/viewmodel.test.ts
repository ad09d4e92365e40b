import { describe, expect, it } from "vitest";

import { SequenceCounter, decodeFrame } from "../src/protocol.js";
import {
  applyMessage,
  canConfirm,
  confirmSelection,
  cycleSelection,
  initialViewModel,
  previewSelection,
  selectCandidate,
  toggleAcknowledgement,
} from "../src/viewmodel.js";
import { openConsole } from "./fixtures.js";

const errorFrame = (reason: string) =>
  decodeFrame(
    JSON.stringify({
      type: "error",
      session_id: "s1",
      seq: 2,
      payload: { reason, detail: "Assistance not valid" },
    }),
  );

describe("incoming frames", () => {
  it("preselects the preferred candidate on a new request", () => {
    const view = openConsole();
    expect(view.connection).toBe("connected");
    expect(view.candidates).toHaveLength(2);
    expect(view.selectedId).toBe(0);
    expect(view.sessionState).toBe("awaiting_operator");
  });

  it("state_update unlocks input and tracks the session", () => {
    let view = { ...openConsole(), pending: true };
    view = applyMessage(
      view,
      decodeFrame(
        JSON.stringify({
          type: "state_update",
          session_id: "s1",
          seq: 2,
          payload: { state: "executing", vehicle_mode: "assisted_driving" },
        }),
      ),
    );
    expect(view.sessionState).toBe("executing");
    expect(view.pending).toBe(false);
  });
});

describe("selection", () => {
  it("cycles forward and backward with wrap-around", () => {
    let view = openConsole();
    view = cycleSelection(view, "next");
    expect(view.selectedId).toBe(1);
    view = cycleSelection(view, "next");
    expect(view.selectedId).toBe(0);
    view = cycleSelection(view, "previous");
    expect(view.selectedId).toBe(1);
  });

  it("a single candidate cycles onto itself", () => {
    let view = openConsole();
    view = { ...view, candidates: [view.candidates[0]], selectedId: 0 };
    expect(cycleSelection(view, "next").selectedId).toBe(0);
  });

  it("pointer selection picks the clicked path and ignores unknown ids", () => {
    let view = openConsole();
    view = selectCandidate(view, 1);
    expect(view.selectedId).toBe(1);
    expect(selectCandidate(view, 99).selectedId).toBe(1);
  });

  it("changing selection drops previous acknowledgements", () => {
    let view = openConsole();
    view = toggleAcknowledgement(view, "parking_area");
    expect(view.acknowledgedMods.has("parking_area")).toBe(true);
    view = cycleSelection(view, "next");
    expect(view.acknowledgedMods.size).toBe(0);
  });
});

describe("confirm gating", () => {
  it("is disabled until every modification is acknowledged", () => {
    let view = selectCandidate(openConsole(), 1);
    expect(canConfirm(view)).toBe(false);
    view = toggleAcknowledgement(view, "sidewalk");
    expect(canConfirm(view)).toBe(false);
    view = toggleAcknowledgement(view, "solid_line_crossing");
    expect(canConfirm(view)).toBe(true);
  });

  it("confirm emits the candidate's full modification set and locks input", () => {
    let view = selectCandidate(openConsole(), 1);
    view = toggleAcknowledgement(view, "sidewalk");
    view = toggleAcknowledgement(view, "solid_line_crossing");
    const { view: after, frame } = confirmSelection(view, new SequenceCounter());
    const sent = decodeFrame(frame);
    expect(sent.type).toBe("assistance_response");
    expect(sent.payload).toMatchObject({
      candidate_id: 1,
      approved_modifications: ["sidewalk", "solid_line_crossing"],
    });
    expect(after.pending).toBe(true);
    expect(canConfirm(after)).toBe(false);
  });

  it("cannot ever omit a required modification", () => {
    const view = selectCandidate(openConsole(), 1);
    expect(() => confirmSelection(view, new SequenceCounter())).toThrow();
  });

  it("a server rejection unlocks input and surfaces the reason", () => {
    let view = { ...openConsole(), pending: true };
    view = applyMessage(view, errorFrame("stale_path"));
    expect(view.pending).toBe(false);
    expect(view.lastError).toBe("stale_path");
    view = toggleAcknowledgement(view, "parking_area");
    expect(canConfirm(view)).toBe(true);
  });
});

describe("outgoing previews", () => {
  it("selection previews carry gapless sequence numbers", () => {
    const seq = new SequenceCounter();
    const view = openConsole();
    const first = previewSelection(view, seq)!;
    const second = previewSelection(cycleSelection(view, "next"), seq)!;
    expect(decodeFrame(first.frame).seq).toBe(0);
    expect(decodeFrame(second.frame).seq).toBe(1);
  });

  it("nothing is emitted without a selection", () => {
    const view = initialViewModel("s1");
    expect(previewSelection(view, new SequenceCounter())).toBeNull();
  });
});
