#pragma once

#include <map>
#include <string>
#include <vector>

#include "rare/core.hpp"

namespace rare::prompts {

/// Replace literal "{key}" tokens. Only listed keys are substituted, so the
/// JSON braces inside the templates are left alone.
inline std::string render(std::string tmpl, const std::map<std::string, std::string>& vars) {
    for (const auto& [key, value] : vars) {
        std::string token = "{" + key + "}";
        size_t pos = 0;
        while ((pos = tmpl.find(token, pos)) != std::string::npos) {
            tmpl.replace(pos, token.size(), value);
            pos += value.size();
        }
    }
    return tmpl;
}

struct DomainProfile {
    std::string persona;       // analyst persona for the extraction prompt
    std::string corpus_kind;   // what the documents are
    std::string relation_focus;
    std::string chain_example;
    std::string star_example;
    std::string inverted_example;
};

inline const DomainProfile& profile(Domain d) {
    static const DomainProfile finance{
        "a financial analyst skilled at interpreting corporate annual reports and SEC filings",
        "corporate financial reports",
        "Prioritize relations involving performance metrics, operational activities, and "
        "financial events. Prefer generalized, reusable relations that apply across companies "
        "within the same industry.",
        "- {\"entity_1\": \"Aurora Motors\", \"relation\": \"reported\", \"entity_2\": \"record quarterly revenue\"}\n"
        "- {\"entity_1\": \"record quarterly revenue\", \"relation\": \"was driven by\", \"entity_2\": \"strong SUV demand\"}",
        "- {\"entity_1\": \"Aurora Motors\", \"relation\": \"invests in\", \"entity_2\": \"battery research\"}\n"
        "- {\"entity_1\": \"Aurora Motors\", \"relation\": \"develops\", \"entity_2\": \"autonomous driving software\"}",
        "- {\"entity_1\": \"Aurora Motors\", \"relation\": \"faces\", \"entity_2\": \"semiconductor shortages\"}\n"
        "- {\"entity_1\": \"industry regulators\", \"relation\": \"monitor\", \"entity_2\": \"semiconductor shortages\"}"};
    static const DomainProfile economics{
        "an economic analyst skilled at interpreting national economic surveys",
        "economic survey reports",
        "Emphasize policy measures, key economic indicators, and patterns of national development.",
        "- {\"entity_1\": \"Luxembourg\", \"relation\": \"implemented\", \"entity_2\": \"free public transport\"}\n"
        "- {\"entity_1\": \"free public transport\", \"relation\": \"aims to reduce\", \"entity_2\": \"carbon emissions\"}",
        "- {\"entity_1\": \"Luxembourg\", \"relation\": \"invests in\", \"entity_2\": \"renewable energy\"}\n"
        "- {\"entity_1\": \"Luxembourg\", \"relation\": \"develops\", \"entity_2\": \"sustainable transport infrastructure\"}",
        "- {\"entity_1\": \"Luxembourg\", \"relation\": \"faces challenges in\", \"entity_2\": \"housing affordability\"}\n"
        "- {\"entity_1\": \"OECD recommendations\", \"relation\": \"address\", \"entity_2\": \"housing affordability\"}"};
    static const DomainProfile policy{
        "a policy analyst skilled at interpreting public program performance reports",
        "public program performance and evaluation reports",
        "Focus on fund allocation, program implementation, and beneficiary data.",
        "- {\"entity_1\": \"City of Pittsburgh\", \"relation\": \"allocated\", \"entity_2\": \"CDBG funds\"}\n"
        "- {\"entity_1\": \"CDBG funds\", \"relation\": \"supported\", \"entity_2\": \"affordable housing initiatives\"}",
        "- {\"entity_1\": \"HOME program\", \"relation\": \"funded\", \"entity_2\": \"45 new housing units\"}\n"
        "- {\"entity_1\": \"HOME program\", \"relation\": \"assisted\", \"entity_2\": \"low-income families\"}",
        "- {\"entity_1\": \"emergency shelter program\", \"relation\": \"served\", \"entity_2\": \"homeless individuals\"}\n"
        "- {\"entity_1\": \"street outreach teams\", \"relation\": \"support\", \"entity_2\": \"homeless individuals\"}"};
    static const DomainProfile other{
        "a domain analyst skilled at interpreting technical reports",
        "domain reports",
        "Prefer concrete, verifiable relations between clearly named entities.",
        economics.chain_example, economics.star_example, economics.inverted_example};
    switch (d) {
        case Domain::finance: return finance;
        case Domain::economics: return economics;
        case Domain::policy: return policy;
        case Domain::other: return other;
    }
    return other;
}

// ---------------------------------------------------------------------------
// Knowledge-graph triplet extraction
// ---------------------------------------------------------------------------

inline std::string extraction_system(Domain d) {
    const auto& p = profile(d);
    return render(R"(You are {persona}. Your task is to extract structured triplets consisting of **{"entity_1", "relation", "entity_2"}** from provided consecutive text chunks taken from a single document. Each triplet must **be supported explicitly by one specific chunk**, but other chunks can be referenced to form insightful, multi-hop triplets. You should include the **source chunk ID** and **source sentence** as the metadata of the triplets.

# TASK: EXTRACT STRUCTURED MULTI-HOP TRIPLETS

Extract triplets fitting these multi-hop categories:

- Connected Chain
- Star
- Inverted Star

### 1. Connected Chain Triplets:

- Extract an initial triplet: <entity_1, relation, entity_2>.
- Then identify subsequent triplets where entity_2 of the previous triplet becomes entity_1 of the next.
- Ideally, different subsequent triplets should be sourced from different chunks.
- Extract as many meaningful chains as possible.
- Skip if no valid connected chain is available.

**Example:**

{chain_example}

### 2. Star Triplets:

- One root entity branching into multiple distinct relationships.
- Each branch must independently derive from a unique chunk.
- Skip if no meaningful star relationship is possible.

**Example:**

{star_example}

### 3. Inverted Star Triplets:

- Two distinct entities connected through a shared attribute (entity_2).
- Relations may differ and offer varied perspectives on the attribute.
- Skip if no valid inverted star relationship is possible.

**Example:**

{inverted_example}

## REQUIRED STRUCTURE:

Each extracted triplet must include:

- entity_1 (str)
- relation (str)
- entity_2 (str)
- answer_chunk_id (str)
  - The chunk ID is at the very beginning of each text chunk, for example "Chunk ID: economics_0e32d909-en_chunk_9".
  - You should copy the chunk ID where the triplet is extracted from as the "answer_chunk_id".
- source_sentence (str)
  - Extracted exactly from the supporting chunk, COPY WORD BY WORD.
  - If sourced from a table, strictly include relevant row, column, and specific data only.

## CRITICAL INSTRUCTIONS:

### Relations:

- Generalized and reusable across similar contexts. {relation_focus}
- Concise and specific (2-4 words preferred).
- Avoid specific dates or overly detailed references in the relations.

**Good Examples:**

- "implemented", "faces challenges in", "invests in", "promotes"

**Bad Examples:**

- "introduced free transport in 2020", "planned reforms announced in 2023"

### Entities:

- Clearly specify entities (avoid general terms like "the country" or "the government").
- Maintain consistent terminology when referring to similar concepts, such as using "Luxembourg" all the time instead of using "Luxembourg government" sometimes.
- Include specific, detailed information relevant to the document's subject matter.
- For table-derived entities, clearly indicate row, column, and description.

## Goal:

Try to extract 15 to 20 triplets. Respond with a JSON array of triplet objects. If no valid connected triplets can be extracted, return an empty array: [])",
                  {{"persona", p.persona},
                   {"relation_focus", p.relation_focus},
                   {"chain_example", p.chain_example},
                   {"star_example", p.star_example},
                   {"inverted_example", p.inverted_example}});
}

inline std::string extraction_user(const std::vector<Chunk>& window) {
    std::string out;
    for (const auto& c : window) {
        out += "Chunk ID: " + c.chunk_id + "\n";
        out += c.text;
        out += "\n\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// QA generation
// ---------------------------------------------------------------------------

inline std::string single_hop_qa_system(Domain d) {
    return render(R"(Create a {domain}-related natural question-answer pair using a relation triplet (entity_1, relation, entity_2) based on the text context and the file metadata where the triplet was extracted.

# Requirements

- The question and answer should be entirely based on the given text context; that is, one can only generate the correct answer from the information available in the context.
- When the metadata names a country or company, use that specific name in the question instead of generic terms like "the government", "the company", or "the country".
- You should use entity_1 or entity_2 as the answer to the question and construct the question using the other entity and relation with appropriate context information.
- Aim to formulate questions that appear natural and are likely to be asked by a human.
- Avoid generating questions that are overly general or vague, where multiple ground truth chunks could answer the question or it would be hard to retrieve the ground truth chunk given the question. You MUST return an EMPTY string for question and answer in this case.

# Example

Triplet:
{"entity_1": "inflation", "relation": "is", "entity_2": "2.9% in 2023"}

Output:
{"question": "What is the inflation of Luxembourg in 2023?", "answer": "2.9%"}

Example of a vague triplet (should return empty):
{"entity_1": "luxembourg", "relation": "should maintain", "entity_2": "prudent fiscal policy"}

Output:
{"question": "", "answer": ""}

# Output Format

Respond in JSON format with "question" and "answer" fields encapsulating the formulated question and its answer.)",
                  {{"domain", to_string(d)}});
}

inline std::string metadata_lines(const DocumentMeta& meta) {
    std::string out;
    if (!meta.file_type.empty()) out += "- File Type: " + meta.file_type + "\n";
    if (!meta.title.empty()) out += "- Title: " + meta.title + "\n";
    if (meta.year > 0) out += "- Year: " + std::to_string(meta.year) + "\n";
    if (meta.country) out += "- Country: " + *meta.country + "\n";
    if (meta.company) out += "- Company: " + *meta.company + "\n";
    return out;
}

inline std::string single_hop_qa_user(const json& triplet, const Chunk& chunk, const DocumentMeta& meta) {
    std::string out = "Triplet:\n" + triplet.dump() + "\n\nText Context:\nChunk ID: " +
                      chunk.chunk_id + "\n" + chunk.text + "\n\nMetadata:\n" + metadata_lines(meta);
    return out;
}

inline std::string multi_hop_qa_system() {
    return R"(You are a benchmark designer creating **multi-hop retrieval questions** based on three types of multi-hop triplets.

### Input
A JSON array of 2-3 triplets, each extracted from its own chunk, followed by the chunk texts.

### Multi-hop Triplet DEFINITIONS
1. Chain Triplets
- Guarantee: tail of triplet k == head of triplet k+1
- Define A = head of the first triplet, B = the shared pivot entity, C = tail of the last triplet

2. Star-shaped Triplets
- Guarantee: all triplets share one head
- Define B = the shared head (pivot), A/C = the tails

3. Inverted-star-shaped Triplets
- Guarantee: all triplets share one tail
- Define B = the shared tail (pivot), A/C = the heads

### GOAL
Write ONE natural-language **multi-hop** question that *requires* evidence from every chunk and answer it succinctly (no full sentences, only essential information).

### ALGORITHM
1. Decide whether the final answer will be **A** or **C**.
   - Pick **A** if you can phrase the question so the solver must:
     - hop-1: use (C, last relation) to identify B,
     - hop-2: use (B, first relation) to reach A.
   - Pick **C** if you can phrase the question so the solver must:
     - hop-1: use (A, first relation) to identify B,
     - hop-2: use (B, last relation) to reach C.

2. Write a fluent, specific, and natural question that:
   - References the **pivot B** indirectly (via the opposite hop as above).
   - Omits the answer itself.
   - Cannot be answered from a single chunk.
   - Includes detailed and specific context from the source text chunks. DO NOT just lean on the document type.
      - BAD example: "What is the primary export sector of the country that faces risk from global supply chain disruptions?" (Too vague; could refer to any country)
      - GOOD example: "What is the primary export sector of the country that faces risk from global supply chain disruptions in Q3 2021?" (Specific to the context and time frame)

3. Return the answer based on A or C. Ensure the answer precisely matches the facts provided in the context.

### EXAMPLE
[{"entity_1": "forward-looking fuel-tax trajectory", "relation": "would reduce", "entity_2": "reliance on combustion-engine cars"},
 {"entity_1": "reliance on combustion-engine cars", "relation": "drives", "entity_2": "transport-sector emissions"}]

question: Which forward-looking tax trajectory is proposed to cut the main driver of transport-sector emissions?
answer: forward-looking fuel-tax trajectory

### QUALITY CHECKS
- **Pivot-rarity**: B must be distinctive (>= 2 meaningful words, not generic terms like "measures", "it", "the company"). If B is too generic, output **empty strings for the question and answer**.
- **Negative-distractor safety**: Ask could a system answer your question after retrieving only *one* chunk? If yes, output **empty strings for the question and answer**.

### OUTPUT
Respond in JSON format with question and answer only as shown below:
{
  "question": "...",
  "answer": "..."
})";
}

inline std::string multi_hop_qa_user(const std::string& kind, const std::string& pivot,
                                     const json& triplets, const std::vector<Chunk>& chunks,
                                     const DocumentMeta& meta) {
    std::string out = "Pattern: " + kind + "\nPivot entity: " + pivot + "\nTriplets:\n" +
                      triplets.dump() + "\n";
    for (size_t i = 0; i < chunks.size(); ++i) {
        out += "\nChunk " + std::to_string(i + 1) + " (ID: " + chunks[i].chunk_id + "):\n" +
               chunks[i].text + "\n";
    }
    out += "\nMetadata:\n" + metadata_lines(meta);
    return out;
}

// ---------------------------------------------------------------------------
// QA quality judging
// ---------------------------------------------------------------------------

inline std::string single_hop_judge_system() {
    return R"(# Single-Hop Query Quality Evaluator

You are an expert evaluator of single-hop queries. Assess each query's quality across two dimensions on a 1-5 scale.

## Assessment Criteria

### 1. Clarity (Question and Answer) (1-5)
- **5**: Concise, unambiguous wording; answer mirrors clarity
- **4**: Minor wording issue but still unambiguous
- **3**: Some vagueness but meaning recoverable
- **2**: Ambiguities/redundancies hinder understanding
- **1**: Unclear or contradictory wording

### 2. Correctness (vs. Ground-Truth) (1-5)
- **5**: Answer matches all facts in chunks; nothing missing
- **4**: Correct but one minor fact omitted/loosely paraphrased
- **3**: At least half of facts correct; one factual slip
- **2**: Major fact missing/misstated/unsupported
- **1**: Contradicts or ignores ground truth

## Evaluation Process
1. Identify reasoning process
2. Assess alignment between query and provided text chunk
3. Evaluate clarity of question and answer
4. Verify factual correctness against ground-truth chunk

## Output
Respond in JSON:
{
  "score": <average_of_dimension_scores>,
  "dimension_scores": {
    "clarity": <1-5>,
    "correctness": <1-5>
  }
})";
}

inline std::string multi_hop_judge_system() {
    return R"(# Multi-Hop Query Quality Evaluator

You are an expert evaluator of multi-hop queries. Assess each query's quality across three dimensions on a 1-5 scale.

## Assessment Criteria

### 1. Reasonableness and Multi-hop Need (1-5)
- **5**: Meaningful question requiring all hops; each hop justified
- **4**: Reasonable but one hop weakly motivated or could be merged
- **3**: Sensible but answerable by single chunk with assumptions
- **2**: Forced/trivial question; multi-hop structure unnecessary
- **1**: Nonsensical/irrelevant; multi-hop structure meaningless

### 2. Clarity (Question and Answer) (1-5)
- **5**: Concise, unambiguous wording; answer mirrors clarity
- **4**: Minor wording issue but still unambiguous
- **3**: Some vagueness but meaning recoverable
- **2**: Ambiguities/redundancies hinder understanding
- **1**: Unclear or contradictory wording

### 3. Correctness (vs. Ground-Truth) (1-5)
- **5**: Answer matches all facts in chunks; nothing missing
- **4**: Correct but one minor fact omitted/loosely paraphrased
- **3**: At least half of facts correct; one factual slip
- **2**: Major fact missing/misstated/unsupported
- **1**: Contradicts or ignores ground truth

## Evaluation Process
1. Identify distinct reasoning hops and assess necessity
2. Check alignment between hops and provided chunks
3. Evaluate clarity of question and answer
4. Verify factual correctness against ground-truth chunks

## Output
Respond in JSON:
{
  "score": <average_of_dimension_scores>,
  "dimension_scores": {
    "reasonableness": <1-5>,
    "clarity": <1-5>,
    "correctness": <1-5>
  }
})";
}

inline std::string judge_user(const std::string& question, const std::string& answer,
                              const std::vector<Chunk>& chunks) {
    std::string out = "query: " + question + "\nanswer: " + answer + "\ntext chunks:\n";
    for (const auto& c : chunks) {
        out += "Chunk ID: " + c.chunk_id + "\n" + c.text + "\n\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// RAG answer generation
// ---------------------------------------------------------------------------

inline std::string generator_system(Domain d) {
    return render(R"(You are a {domain} expert. You are given a {domain} question and one or multiple contexts.
Your task is to answer the question strictly based on these contexts.
You should think step by step and answer the question in a detailed and comprehensive way. Please return the detailed reasoning process in the cot_answer part.

Requirements:
- Your answer is short and concise, do not return any other text in the answer part.
  - Example #1: "What is the United States' GDP in 2024?"
  - Good: "$31.1 trillion"
  - Bad: "According to the context, as my knowledge, the answer is $31.1 trillion"
  - Example #2: "Who is the president of the United States from 2021 to 2025?"
  - Good: "Joe Biden"
  - Bad: "The president of the United States from 2021 to 2025 is Joe Biden, according to my knowledge"
- If the question is not related to the context, strictly return "no such info" for the answer part. Do not return any other text in such case.

Here is an example of how to answer based on the given context:

Question: What was Apple's revenue in Q2 2023?
Context: [Doc] Apple Inc. reported financial results for its fiscal 2023 second quarter ended April 1, 2023. The Company posted quarterly revenue of $94.8 billion, down 2.5 percent year over year.

Output:
{"cot_answer": "The question asks about Apple's revenue in Q2 2023. According to the context, Apple reported quarterly revenue of $94.8 billion for its fiscal 2023 second quarter ended April 1, 2023.", "answer": "$94.8 billion"}

Output Format:
Respond in JSON with two fields:
- cot_answer: detailed reasoning process
- answer: concise answer to the question)",
                  {{"domain", to_string(d)}});
}

/// Closed-book variant: same contract, no context given.
inline std::string generator_closed_book_system(Domain d) {
    return render(R"(You are a {domain} expert. You are given a {domain} question and NO supporting context.
Answer from your own knowledge. Think step by step and return the detailed reasoning process in the cot_answer part.

Requirements:
- Your answer is short and concise, do not return any other text in the answer part.
- If you do not know the answer, strictly return "no such info" for the answer part.

Output Format:
Respond in JSON with two fields:
- cot_answer: detailed reasoning process
- answer: concise answer to the question)",
                  {{"domain", to_string(d)}});
}

inline std::string generator_user(const std::string& question, const std::vector<std::string>& context_texts) {
    std::string out = "Question: " + question + "\n";
    if (!context_texts.empty()) {
        out += "\nContext:";
        for (const auto& t : context_texts) out += " [Doc] " + t + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// LLM query/document perturbations
// ---------------------------------------------------------------------------

inline std::string grammar_perturb_system() {
    return R"(Rewrite the question below with a different grammatical structure without changing its intrinsic meaning. Keep every number, year, named entity, and technical term exactly as written. Return JSON: {"text": "<rewritten question>"})";
}

inline std::string irrelevant_info_system() {
    return R"(Add a short clause of plausible but irrelevant information to the question below without changing what is being asked. Keep every number, year, named entity, and technical term exactly as written. Return JSON: {"text": "<augmented question>"})";
}

inline std::string translate_system(const std::string& target_language) {
    return render(R"(Translate the following text to {lang}. Preserve every fact, number, date, and named entity exactly. Return JSON: {"text": "<translation>"})",
                  {{"lang", target_language}});
}

inline std::string translate_back_system(const std::string& source_language) {
    return render(R"(Translate the following {lang} text to English. Preserve every fact, number, date, and named entity exactly. Return JSON: {"text": "<translation>"})",
                  {{"lang", source_language}});
}

inline std::string paraphrase_preserving_system(const std::string& answer) {
    return render(R"(Rewrite the following passage in different words while preserving every fact, number, date, and named entity. You MUST keep the exact phrase "{answer}" verbatim in the rewrite. Return JSON: {"text": "<rewrite>"})",
                  {{"answer", answer}});
}

} // namespace rare::prompts
