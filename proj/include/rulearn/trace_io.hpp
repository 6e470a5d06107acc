#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rulearn/types.hpp"

namespace rulearn {

// Traces persist as JSON Lines: a header record, one record per event, and a
// closing outcome record. A missing outcome record marks an interrupted
// trial.
std::string trace_to_jsonl(const TrialTrace& trace);
TrialTrace trace_from_jsonl(const std::string& text);

void save_trace(const std::string& path, const TrialTrace& trace);
std::optional<TrialTrace> load_trace(const std::string& path);

std::string transcripts_to_jsonl(const std::vector<TranscriptRecord>& records);
std::vector<TranscriptRecord> transcripts_from_jsonl(const std::string& text);
void save_transcripts(const std::string& path, const std::vector<TranscriptRecord>& records);

}  // namespace rulearn
