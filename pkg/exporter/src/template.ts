/**
 * Text keys shared with the ranking engine.
 *
 * The exporter and the engine agree on store keys by construction: context
 * keys are the exact context string, joint-text keys are the exact output of
 * the `{context} : {definition}` template. Golden vectors for the template
 * live in testdata/joint_text_golden.json and are asserted on both sides.
 */

export function buildJointText(context: string, definition: string): string {
  if (!context) throw new Error('context must be non-empty');
  if (!definition) throw new Error('definition must be non-empty');
  return `${context} : ${definition}`;
}

/** Lowercase and collapse internal whitespace, same as the engine's lookup. */
export function normalizeLemma(text: string): string {
  return text.trim().replace(/\s+/g, ' ').toLowerCase();
}
