#include "vecchia/parallel.hpp"

#include <cstdlib>
#include <iostream>
#include <string>

#include "vecchia/error.hpp"

namespace vecchia {

int default_thread_count() {
  if (const char* env = std::getenv("VECCHIA_THREADS")) {
    try {
      const int value = std::stoi(env);
      if (value > 0) return value;
    } catch (const std::exception&) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {

void default_warning(const std::string& message) { std::cerr << "warning: " << message << '\n'; }

std::atomic<WarningHandler> g_handler{&default_warning};

}  // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
  return g_handler.exchange(handler ? handler : &default_warning);
}

void warn(const std::string& message) { g_handler.load()(message); }

}  // namespace vecchia
