#pragma once

// Small persistent worker pool. parallel_for blocks until every index ran;
// callers keep results deterministic by writing into per-index slots.

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace ssdyn {

class ThreadPool {
public:
    explicit ThreadPool(int n_threads = 0) {
        int n = n_threads > 0 ? n_threads : static_cast<int>(std::thread::hardware_concurrency());
        n = std::max(n, 1);
        for (int t = 1; t < n; ++t) workers_.emplace_back([this] { worker_loop(); });
    }

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    ~ThreadPool() {
        {
            std::lock_guard lock(mu_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& w : workers_) w.join();
    }

    int size() const { return static_cast<int>(workers_.size()) + 1; }

    /// Runs fn(0..n-1); the calling thread participates. Rethrows the first
    /// exception (lowest index) after all indices finished.
    void parallel_for(int n, const std::function<void(int)>& fn) {
        if (n <= 0) return;
        if (workers_.empty() || n == 1) {
            for (int i = 0; i < n; ++i) fn(i);
            return;
        }
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
        {
            std::lock_guard lock(mu_);
            job_ = &fn;
            job_errors_ = &errors;
            job_size_ = n;
            next_.store(0);
            pending_ = n;
            ++generation_;
        }
        cv_.notify_all();
        drain();
        {
            std::unique_lock lock(mu_);
            done_cv_.wait(lock, [this] { return pending_ == 0; });
            job_ = nullptr;
        }
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

private:
    void drain() {
        for (;;) {
            const int i = next_.fetch_add(1);
            if (i >= job_size_) return;
            try {
                (*job_)(i);
            } catch (...) {
                (*job_errors_)[static_cast<std::size_t>(i)] = std::current_exception();
            }
            std::lock_guard lock(mu_);
            if (--pending_ == 0) done_cv_.notify_all();
        }
    }

    void worker_loop() {
        long seen = 0;
        for (;;) {
            {
                std::unique_lock lock(mu_);
                cv_.wait(lock, [&] { return stop_ || (generation_ != seen && job_ != nullptr); });
                if (stop_) return;
                seen = generation_;
            }
            drain();
        }
    }

    std::vector<std::thread> workers_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    const std::function<void(int)>* job_ = nullptr;
    std::vector<std::exception_ptr>* job_errors_ = nullptr;
    int job_size_ = 0;
    std::atomic<int> next_{0};
    int pending_ = 0;
    long generation_ = 0;
    bool stop_ = false;
};

}  // namespace ssdyn
