#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tunnelwatch/model.hpp"
#include "tunnelwatch/pcap.hpp"

namespace tunnelwatch {

/// Per-source query rate over a trailing window (t - window, t].
class RateWindow {
public:
    explicit RateWindow(double window_seconds);

    /// Records a query from `source` at `t` and returns queries/second for that source.
    double observe(std::uint32_t source, Timestamp t);

private:
    double window_;
    std::unordered_map<std::uint32_t, std::deque<double>> seen_;
};

struct Alert {
    DnsQueryRecord record;
    double score = 0.0;
    Label label = Label::Tunnel;
    ModelKind model = ModelKind::DnsClassifierNet;
    double threshold = 0.5;
    double window_query_rate = 0.0;
};

struct ScoredRecord {
    DnsQueryRecord record;
    Prediction prediction;
    double window_query_rate = 0.0;
    std::optional<Alert> alert;
};

struct StreamOptions {
    std::optional<double> threshold; // defaults to the model's threshold
    double window_seconds = 60.0;
    bool track_rate = true;
    std::size_t workers = 1;         // >1 scores on a thread pool, output order unchanged
    std::size_t queue_capacity = 1024;
};

using RecordSource = std::function<std::optional<DnsQueryRecord>()>;
using ScoredSink = std::function<void(const ScoredRecord&)>;

/// Pulls records from `source` until it returns nullopt, scores each with the
/// shared model and hands results to `sink` in input order. Rate state lives
/// in the calling thread only. Throws InvalidArgument for window_seconds <= 0
/// and rethrows the first scoring error.
void score_stream(const RecordSource& source, const ModelArtifact& model, const StreamOptions& options,
                  const ScoredSink& sink);

std::vector<ScoredRecord> score_stream(std::span<const DnsQueryRecord> records, const ModelArtifact& model,
                                       const StreamOptions& options);

/// One JSON object per line: {ts, src, qname, score, label, rate, model}.
std::string alert_to_line(const Alert& alert);

} // namespace tunnelwatch
