/**
 * Payload shapes of the annotation API. The server owns all state;
 * these mirror its JSON exactly.
 */

export interface TreeNode {
  id: string;
  text: string;
  weight: number;
  parents: string[];
}

export interface TreePayload {
  nodes: TreeNode[];
}

export type FeatureKind = "text" | "date_range" | "integer" | "boolean" | "categorical";

export interface FeatureSpec {
  key: string;
  display_name: string;
  kind: FeatureKind;
  categories?: string[];
  allowed_integers?: number[];
}

export interface SchemaPayload {
  features: FeatureSpec[];
}

export interface ArticleSummary {
  article_id: string;
  title: string;
  source: string;
  published: string | null;
  status: string;
  relevance_score: number | null;
}

export interface Article extends ArticleSummary {
  body: string;
  url: string;
  matched_keywords: string[];
}

export interface SessionPayload {
  article_id: string;
  answers: Record<string, "yes" | "no">;
  frontier: string[];
  score: number;
  threshold: number;
  classification: "relevant" | "irrelevant";
  completed: boolean;
  annotator: string;
  status?: string;
}

export interface Violation {
  key: string;
  rule: string;
  message: string;
}

export interface FeaturesBody {
  label: "pos" | "neg";
  values: Record<string, string>;
  source_article_ids?: string[];
}
