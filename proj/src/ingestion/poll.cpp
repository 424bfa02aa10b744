#include "camgrid/ingestion/poll.hpp"

#include <cmath>
#include <condition_variable>
#include <mutex>
#include <optional>
#include <thread>

#include "camgrid/core/error.hpp"
#include "camgrid/ingestion/multipart.hpp"
#include "camgrid/ingestion/snapshot.hpp"

namespace camgrid::ingestion {

namespace {

using SteadyClock = std::chrono::steady_clock;
using Seconds = std::chrono::duration<double>;

SteadyClock::duration to_duration(double seconds) {
    return std::chrono::duration_cast<SteadyClock::duration>(Seconds(seconds));
}

// Sleeps until `when`; returns false if a stop was requested first.
bool sleep_until(SteadyClock::time_point when, std::stop_token stop) {
    std::mutex m;
    std::condition_variable_any cv;
    std::unique_lock lock(m);
    return !cv.wait_until(lock, stop, when, [] { return false; }) && !stop.stop_requested();
}

AcquisitionSummary poll_snapshots(const StreamEndpoint& endpoint, const PollOptions& opt, const FrameSink& sink,
                                  std::stop_token stop) {
    AcquisitionSummary s;
    const double period = 1.0 / opt.fps;
    s.ticks_expected = static_cast<std::uint64_t>(std::ceil(opt.duration_s * opt.fps - 1e-9));
    const auto t0 = SteadyClock::now();
    std::uint64_t next_seq = 0;
    int consecutive = 0;
    std::uint64_t k = 0;
    while (k < s.ticks_expected) {
        if (!sleep_until(t0 + to_duration(static_cast<double>(k) * period), stop)) {
            s.cancelled = true;
            break;
        }
        bool ok = false;
        try {
            auto frame = fetch_snapshot_frame(endpoint, opt.http);
            frame.camera_id = opt.camera_id;
            frame.seq = next_seq++;
            switch (sink(std::move(frame))) {
                case SinkResult::ok: ok = true; break;
                case SinkResult::failed: break;
                case SinkResult::stop:
                    ++s.frames_delivered;
                    ++k;
                    s.cancelled = true;
                    break;
            }
            if (s.cancelled) break;
        } catch (const Error& e) {
            ++s.errors;
            s.last_error = e.what();
        }
        if (ok) {
            ++s.frames_delivered;
            consecutive = 0;
        } else {
            ++s.ticks_failed;
            ++consecutive;
        }
        ++k;
        if (consecutive >= opt.max_consecutive_failures) {
            s.aborted = true;
            break;
        }
        const double since = Seconds(SteadyClock::now() - t0).count();
        const auto due = static_cast<std::uint64_t>(std::max(0.0, std::ceil(since / period - 1e-9)));
        if (due > k) {
            const auto next = std::min(due, s.ticks_expected);
            s.ticks_skipped += next - k;
            k = next;
        }
    }
    // Ticks never reached because of abort or cancellation count as skipped.
    if (k < s.ticks_expected) s.ticks_skipped += s.ticks_expected - k;
    s.elapsed_s = Seconds(SteadyClock::now() - t0).count();
    return s;
}

struct Mailbox {
    std::mutex m;
    std::condition_variable_any cv;
    std::optional<Frame> slot;
    std::uint64_t dropped = 0;
    std::uint64_t errors = 0;
    bool reader_failed = false;
    std::string last_error;
};

AcquisitionSummary poll_mjpeg(const StreamEndpoint& endpoint, const PollOptions& opt, const FrameSink& sink,
                              std::stop_token stop) {
    AcquisitionSummary s;
    Mailbox box;
    const auto t0 = SteadyClock::now();
    const auto deadline = t0 + to_duration(opt.duration_s);
    const auto period = to_duration(1.0 / opt.fps);

    std::jthread reader([&](std::stop_token rstop) {
        int consecutive = 0;
        while (!rstop.stop_requested()) {
            std::optional<MultipartParserState> parser;
            bool got_frame = false;
            std::string error;
            try {
                http_stream(
                    endpoint.url, opt.http,
                    [&](const StreamHead& head) {
                        if (head.status != 200) {
                            error = "upstream answered HTTP " + std::to_string(head.status);
                            return false;
                        }
                        auto boundary = boundary_from_content_type(head.content_type);
                        if (!boundary) {
                            error = "stream has no multipart boundary";
                            return false;
                        }
                        parser = make_multipart_state(*boundary);
                        return true;
                    },
                    [&](std::span<const std::uint8_t> chunk) {
                        for (auto& part : feed_multipart(*parser, chunk)) {
                            auto frame = make_frame(std::move(part.payload), now_utc());
                            std::lock_guard lock(box.m);
                            if (box.slot) ++box.dropped;
                            box.slot = std::move(frame);
                            got_frame = true;
                            consecutive = 0;
                            box.cv.notify_all();
                        }
                        return true;
                    },
                    rstop);
                if (error.empty() && !rstop.stop_requested()) error = "stream ended";
            } catch (const Error& e) {
                error = e.what();
            }
            if (rstop.stop_requested()) break;
            if (!got_frame) ++consecutive;
            {
                std::lock_guard lock(box.m);
                ++box.errors;
                box.last_error = error;
                if (consecutive >= opt.max_consecutive_failures) {
                    box.reader_failed = true;
                    box.cv.notify_all();
                    return;
                }
            }
            sleep_until(SteadyClock::now() + std::min<SteadyClock::duration>(period, std::chrono::seconds(1)), rstop);
        }
    });

    std::uint64_t next_seq = 0;
    int consecutive = 0;
    auto tat = t0;  // earliest time the next delivery may happen
    while (true) {
        std::optional<Frame> frame;
        {
            std::unique_lock lock(box.m);
            const bool ready = box.cv.wait_until(lock, stop, deadline, [&] { return box.slot || box.reader_failed; });
            if (stop.stop_requested()) {
                s.cancelled = true;
                break;
            }
            if (!ready) break;  // duration elapsed
            if (!box.slot && box.reader_failed) {
                s.aborted = true;
                break;
            }
        }
        if (SteadyClock::now() < tat) {
            if (tat >= deadline) break;
            if (!sleep_until(tat, stop)) {
                s.cancelled = true;
                break;
            }
        }
        {
            std::lock_guard lock(box.m);
            frame = std::move(box.slot);
            box.slot.reset();
        }
        if (!frame) continue;
        const auto now = SteadyClock::now();
        if (now >= deadline) break;
        tat = std::max(now, tat) + period;
        frame->camera_id = opt.camera_id;
        frame->seq = next_seq++;
        const auto result = sink(std::move(*frame));
        if (result == SinkResult::stop) {
            ++s.frames_delivered;
            s.cancelled = true;
            break;
        }
        if (result == SinkResult::ok) {
            ++s.frames_delivered;
            consecutive = 0;
        } else {
            ++s.errors;
            if (++consecutive >= opt.max_consecutive_failures) {
                s.aborted = true;
                s.last_error = "analysis failed on consecutive frames";
                break;
            }
        }
    }
    reader.request_stop();
    reader.join();
    s.elapsed_s = std::min(Seconds(SteadyClock::now() - t0).count(), opt.duration_s);
    std::lock_guard lock(box.m);
    s.frames_dropped = box.dropped;
    s.errors += box.errors;
    if (s.last_error.empty()) s.last_error = box.last_error;
    return s;
}

}  // namespace

nlohmann::json to_json(const AcquisitionSummary& s) {
    return {{"frames_delivered", s.frames_delivered},
            {"ticks_expected", s.ticks_expected},
            {"ticks_skipped", s.ticks_skipped},
            {"ticks_failed", s.ticks_failed},
            {"frames_dropped", s.frames_dropped},
            {"errors", s.errors},
            {"elapsed_s", s.elapsed_s},
            {"effective_fps", s.effective_fps},
            {"aborted", s.aborted},
            {"cancelled", s.cancelled},
            {"last_error", s.last_error}};
}

AcquisitionSummary poll_stream(const StreamEndpoint& endpoint, const PollOptions& options, const FrameSink& sink,
                               std::stop_token stop) {
    if (!(options.fps > 0.0) || !(options.duration_s > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "fps and duration must be positive");
    }
    if (options.max_consecutive_failures < 1) {
        throw Error(ErrorCode::invalid_argument, "failure threshold must be at least 1");
    }
    auto s = endpoint.mode == RetrievalMode::mjpeg_stream ? poll_mjpeg(endpoint, options, sink, stop)
                                                          : poll_snapshots(endpoint, options, sink, stop);
    const double window = std::min(options.duration_s, std::max(s.elapsed_s, 1e-9));
    s.effective_fps = static_cast<double>(s.frames_delivered) / window;
    return s;
}

}  // namespace camgrid::ingestion
