#include "stanloop/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <stdexcept>
#include <thread>

namespace stanloop::subprocess {

namespace {

void set_nonblocking(int fd) { fcntl(fd, F_SETFL, fcntl(fd, F_GETFL) | O_NONBLOCK); }

[[noreturn]] void child_exec(const std::vector<std::string>& argv, int in_fd, int out_fd,
                             int err_fd, const std::optional<std::filesystem::path>& cwd) {
    dup2(in_fd, STDIN_FILENO);
    dup2(out_fd, STDOUT_FILENO);
    dup2(err_fd, STDERR_FILENO);
    for (int fd = 3; fd < 256; ++fd) close(fd);
    if (cwd && chdir(cwd->c_str()) != 0) _exit(127);
    std::vector<char*> cargv;
    cargv.reserve(argv.size() + 1);
    for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);
    execvp(cargv[0], cargv.data());
    _exit(127);
}

}  // namespace

CommandResult run_command(const std::vector<std::string>& argv, const std::string& stdin_data,
                          long timeout_ms, const std::optional<std::filesystem::path>& cwd) {
    if (argv.empty()) throw std::invalid_argument("run_command: empty argv");

    int in_pipe[2], out_pipe[2], err_pipe[2];
    if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0 || pipe(err_pipe) != 0)
        throw std::runtime_error("run_command: pipe() failed");

    const pid_t pid = fork();
    if (pid < 0) throw std::runtime_error("run_command: fork() failed");
    if (pid == 0) {
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(err_pipe[0]);
        child_exec(argv, in_pipe[0], out_pipe[1], err_pipe[1], cwd);
    }

    close(in_pipe[0]);
    close(out_pipe[1]);
    close(err_pipe[1]);
    set_nonblocking(in_pipe[1]);
    set_nonblocking(out_pipe[0]);
    set_nonblocking(err_pipe[0]);

    CommandResult res;
    std::size_t written = 0;
    int stdin_fd = stdin_data.empty() ? (close(in_pipe[1]), -1) : in_pipe[1];
    int stdout_fd = out_pipe[0];
    int stderr_fd = err_pipe[0];

    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);

    char buf[4096];
    while (stdout_fd >= 0 || stderr_fd >= 0 || stdin_fd >= 0) {
        struct pollfd fds[3];
        int nfds = 0;
        int idx_in = -1, idx_out = -1, idx_err = -1;
        if (stdin_fd >= 0) {
            idx_in = nfds;
            fds[nfds++] = {stdin_fd, POLLOUT, 0};
        }
        if (stdout_fd >= 0) {
            idx_out = nfds;
            fds[nfds++] = {stdout_fd, POLLIN, 0};
        }
        if (stderr_fd >= 0) {
            idx_err = nfds;
            fds[nfds++] = {stderr_fd, POLLIN, 0};
        }

        int wait_ms = 200;
        if (timeout_ms >= 0) {
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                                  deadline - std::chrono::steady_clock::now())
                                  .count();
            if (left <= 0) {
                res.timed_out = true;
                kill(pid, SIGKILL);
                break;
            }
            wait_ms = static_cast<int>(std::min<long>(left, 200));
        }

        const int rc = poll(fds, static_cast<nfds_t>(nfds), wait_ms);
        if (rc < 0) {
            if (errno == EINTR) continue;
            break;
        }

        if (idx_in >= 0 && (fds[idx_in].revents & (POLLOUT | POLLERR | POLLHUP))) {
            const ssize_t n = write(stdin_fd, stdin_data.data() + written,
                                    stdin_data.size() - written);
            if (n > 0) written += static_cast<std::size_t>(n);
            if (n < 0 || written == stdin_data.size()) {
                close(stdin_fd);
                stdin_fd = -1;
            }
        }
        auto drain = [&](int& fd, std::string& sink, int idx) {
            if (idx < 0 || !(fds[idx].revents & (POLLIN | POLLHUP))) return;
            const ssize_t n = read(fd, buf, sizeof(buf));
            if (n > 0) {
                sink.append(buf, static_cast<std::size_t>(n));
            } else if (n == 0 || (n < 0 && errno != EAGAIN)) {
                close(fd);
                fd = -1;
            }
        };
        drain(stdout_fd, res.out, idx_out);
        drain(stderr_fd, res.err, idx_err);
    }

    if (stdin_fd >= 0) close(stdin_fd);
    if (stdout_fd >= 0) close(stdout_fd);
    if (stderr_fd >= 0) close(stderr_fd);

    int status = 0;
    waitpid(pid, &status, 0);
    if (res.timed_out)
        res.exit_code = -1;
    else if (WIFEXITED(status))
        res.exit_code = WEXITSTATUS(status);
    else if (WIFSIGNALED(status))
        res.exit_code = 128 + WTERMSIG(status);
    return res;
}

std::vector<CommandResult> run_parallel(const std::vector<std::vector<std::string>>& commands,
                                        std::size_t max_parallel) {
    if (max_parallel == 0) max_parallel = 1;
    std::vector<CommandResult> results(commands.size());
    std::size_t next = 0;
    while (next < commands.size()) {
        const std::size_t batch = std::min(max_parallel, commands.size() - next);
        std::vector<std::thread> threads;
        threads.reserve(batch);
        for (std::size_t i = 0; i < batch; ++i) {
            const std::size_t k = next + i;
            threads.emplace_back([&, k] { results[k] = run_command(commands[k]); });
        }
        for (auto& t : threads) t.join();
        next += batch;
    }
    return results;
}

}  // namespace stanloop::subprocess
