// Form validation and policy row status. The expiration rule matches the
// server exactly: every policy needs an expiration date, and a policy is
// expired from the expiration instant on (half-open boundary).

export type PolicyFormResult =
  | { ok: true; expiresAtIso: string }
  | { ok: false; error: string };

export function validatePolicyForm(expiresAtLocal: string): PolicyFormResult {
  if (!expiresAtLocal.trim()) {
    return { ok: false, error: "an expiration date is required" };
  }
  const parsed = new Date(expiresAtLocal);
  if (Number.isNaN(parsed.getTime())) {
    return { ok: false, error: `cannot parse expiration date "${expiresAtLocal}"` };
  }
  return { ok: true, expiresAtIso: parsed.toISOString() };
}

export type PolicyStatus = "active" | "disabled" | "expired";

export function policyStatus(enabled: boolean, expiresAtIso: string, now: Date): PolicyStatus {
  if (!enabled) return "disabled";
  if (now.getTime() >= Date.parse(expiresAtIso)) return "expired";
  return "active";
}

export interface RegistrationInput {
  firstName: string;
  lastName: string;
  hasPhoto: boolean;
}

export function validateRegistration(input: RegistrationInput): string | null {
  if (!input.firstName.trim()) return "first name is required";
  if (!input.lastName.trim()) return "last name is required";
  if (!input.hasPhoto) return "a photograph is required";
  return null;
}
