#include "relcomp/process.h"

#include <boost/asio/io_context.hpp>
#include <boost/process.hpp>
#include <future>

#include "relcomp/error.h"

namespace bp = boost::process;

namespace relcomp {

ProcessResult run_process(const std::string& executable, const std::vector<std::string>& args,
                          std::chrono::milliseconds timeout) {
  boost::asio::io_context io;
  std::future<std::string> out, err;
  ProcessResult result;
  try {
    bp::child child(bp::exe = executable, bp::args = args, bp::std_in < bp::null,
                    bp::std_out > out, bp::std_err > err, io);
    io.run_for(timeout);
    if (!io.stopped()) {
      result.timed_out = true;
      child.terminate();
      io.run();
    }
    child.wait();
    result.exit_code = result.timed_out ? -1 : child.exit_code();
  } catch (const bp::process_error& e) {
    throw Error(ErrorKind::kBackend, "cannot run '" + executable + "': " + e.what());
  }
  result.stdout_text = out.get();
  result.stderr_text = err.get();
  return result;
}

struct ProcessStream::Impl {
  bp::ipstream stream;
  bp::child child;
};

ProcessStream::ProcessStream(const std::string& executable, const std::vector<std::string>& args)
    : impl_(std::make_unique<Impl>()) {
  try {
    impl_->child = bp::child(bp::exe = executable, bp::args = args, bp::std_in < bp::null,
                             bp::std_out > impl_->stream, bp::std_err > bp::null);
  } catch (const bp::process_error& e) {
    throw Error(ErrorKind::kBackend, "cannot run '" + executable + "': " + e.what());
  }
}

ProcessStream::~ProcessStream() {
  if (impl_ && impl_->child.valid() && impl_->child.running()) {
    std::error_code ec;
    impl_->child.terminate(ec);
  }
}

std::istream& ProcessStream::out() { return impl_->stream; }

int ProcessStream::finish() {
  if (impl_->child.running()) {
    // Unread output would block the child forever.
    impl_->stream.pipe().close();
  }
  impl_->child.wait();
  return impl_->child.exit_code();
}

}  // namespace relcomp
