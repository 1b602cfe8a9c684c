/** Error classes mirroring the core engine's taxonomy, so UI code can
 * branch on failure kind the same way CLI callers do. */

export class EngineError extends Error {
  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

export class DegenerateDirectionError extends EngineError {}
export class ParallelAxesError extends EngineError {}

export class CyclicHierarchyError extends EngineError {}
export class MultipleRootsError extends EngineError {}
export class ForwardParentReferenceError extends EngineError {}

export class EmptyTrackError extends EngineError {}

export class ParseError extends EngineError {}
export class VersionMismatchError extends EngineError {}
export class ReferentialIntegrityError extends EngineError {}
