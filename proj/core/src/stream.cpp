#include "tunnelwatch/stream.hpp"

#include <algorithm>
#include <condition_variable>
#include <exception>
#include <map>
#include <mutex>
#include <semaphore>
#include <thread>

#include <json.hpp>

#include "tunnelwatch/error.hpp"

namespace tunnelwatch {

RateWindow::RateWindow(double window_seconds) : window_(window_seconds) {
    if (!(window_seconds > 0.0)) throw Error(Errc::InvalidArgument, "window must be positive");
}

double RateWindow::observe(std::uint32_t source, Timestamp t) {
    const double now = t.as_seconds();
    auto& times = seen_[source];
    times.push_back(now);
    while (!times.empty() && times.front() <= now - window_) times.pop_front();
    return static_cast<double>(times.size()) / window_;
}

namespace {

Prediction score_record(const DnsQueryRecord& record, const ModelArtifact& model, double threshold) {
    const Prediction p = predict(model, extract_features(record.qname, model.feature_set));
    return make_prediction(p.score, threshold);
}

ScoredRecord finish(DnsQueryRecord record, Prediction prediction, const ModelArtifact& model, double threshold,
                    const StreamOptions& options, RateWindow& rates) {
    ScoredRecord out;
    out.window_query_rate = options.track_rate ? rates.observe(record.source.address, record.timestamp) : 0.0;
    out.prediction = prediction;
    if (prediction.label == Label::Tunnel) {
        out.alert = Alert{record, prediction.score, prediction.label, model.kind(), threshold, out.window_query_rate};
    }
    out.record = std::move(record);
    return out;
}

// Multi-producer/multi-consumer FIFO; close() wakes all waiters.
template <typename T>
class WorkQueue {
public:
    void push(T item) {
        {
            std::lock_guard lock(mutex_);
            items_.push_back(std::move(item));
        }
        ready_.notify_one();
    }

    std::optional<T> pop() {
        std::unique_lock lock(mutex_);
        ready_.wait(lock, [&] { return !items_.empty() || closed_; });
        if (items_.empty()) return std::nullopt;
        T item = std::move(items_.front());
        items_.pop_front();
        return item;
    }

    void close() {
        {
            std::lock_guard lock(mutex_);
            closed_ = true;
        }
        ready_.notify_all();
    }

private:
    std::mutex mutex_;
    std::condition_variable ready_;
    std::deque<T> items_;
    bool closed_ = false;
};

void score_parallel(const RecordSource& source, const ModelArtifact& model, double threshold,
                    const StreamOptions& options, const ScoredSink& sink) {
    struct Job {
        std::size_t seq;
        DnsQueryRecord record;
    };
    struct Done {
        DnsQueryRecord record;
        Prediction prediction;
    };

    WorkQueue<Job> jobs;
    std::mutex done_mutex;
    std::condition_variable done_ready;
    std::map<std::size_t, Done> done; // reorder buffer
    std::optional<std::size_t> produced_total;
    std::exception_ptr failure;
    // Bounds records in flight (queued + scoring + awaiting reorder).
    std::counting_semaphore<> slots(static_cast<std::ptrdiff_t>(std::max<std::size_t>(options.queue_capacity, 1)));

    auto fail = [&](std::exception_ptr e) {
        std::lock_guard lock(done_mutex);
        if (!failure) failure = e;
        done_ready.notify_all();
    };

    std::jthread producer([&] {
        std::size_t seq = 0;
        try {
            while (true) {
                slots.acquire();
                {
                    std::lock_guard lock(done_mutex);
                    if (failure) break;
                }
                auto record = source();
                if (!record) {
                    slots.release();
                    break;
                }
                jobs.push({seq++, std::move(*record)});
            }
        } catch (...) {
            fail(std::current_exception());
        }
        jobs.close();
        std::lock_guard lock(done_mutex);
        produced_total = seq;
        done_ready.notify_all();
    });

    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < options.workers; ++w) {
        workers.emplace_back([&] {
            while (auto job = jobs.pop()) {
                try {
                    Prediction p = score_record(job->record, model, threshold);
                    std::lock_guard lock(done_mutex);
                    done.emplace(job->seq, Done{std::move(job->record), p});
                    done_ready.notify_all();
                } catch (...) {
                    fail(std::current_exception());
                }
            }
        });
    }

    RateWindow rates(options.window_seconds);
    std::size_t next = 0;
    while (true) {
        std::unique_lock lock(done_mutex);
        done_ready.wait(lock, [&] {
            return failure || done.count(next) > 0 || (produced_total && next == *produced_total);
        });
        if (failure) {
            lock.unlock();
            slots.release(static_cast<std::ptrdiff_t>(options.workers + 1)); // unblock the producer
            jobs.close();
            producer.join();
            for (auto& w : workers) w.join();
            std::rethrow_exception(failure);
        }
        if (produced_total && next == *produced_total) break;
        auto node = done.extract(next);
        lock.unlock();
        try {
            sink(finish(std::move(node.mapped().record), node.mapped().prediction, model, threshold, options, rates));
        } catch (...) {
            fail(std::current_exception());
            continue;
        }
        slots.release();
        ++next;
    }
}

} // namespace

void score_stream(const RecordSource& source, const ModelArtifact& model, const StreamOptions& options,
                  const ScoredSink& sink) {
    if (!(options.window_seconds > 0.0)) throw Error(Errc::InvalidArgument, "window_seconds must be positive");
    const double threshold = options.threshold.value_or(model.threshold());
    if (options.workers > 1) {
        score_parallel(source, model, threshold, options, sink);
        return;
    }
    RateWindow rates(options.window_seconds);
    while (auto record = source()) {
        const Prediction p = score_record(*record, model, threshold);
        sink(finish(std::move(*record), p, model, threshold, options, rates));
    }
}

std::vector<ScoredRecord> score_stream(std::span<const DnsQueryRecord> records, const ModelArtifact& model,
                                       const StreamOptions& options) {
    std::size_t i = 0;
    std::vector<ScoredRecord> out;
    out.reserve(records.size());
    score_stream(
        [&]() -> std::optional<DnsQueryRecord> {
            if (i == records.size()) return std::nullopt;
            return records[i++];
        },
        model, options, [&](const ScoredRecord& r) { out.push_back(r); });
    return out;
}

std::string alert_to_line(const Alert& alert) {
    nlohmann::ordered_json j;
    j["ts"] = alert.record.timestamp.as_seconds();
    j["src"] = alert.record.source.address_string();
    j["qname"] = alert.record.qname.text();
    j["score"] = alert.score;
    j["label"] = to_int(alert.label);
    j["rate"] = alert.window_query_rate;
    j["model"] = std::string(to_string(alert.model));
    return j.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

} // namespace tunnelwatch
