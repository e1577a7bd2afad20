// Bridge server with deterministic fake training, for tests and offline builds.
#include <filesystem>
#include <iostream>

#include "mlcforge/support/mock_bridge.hpp"

int main(int argc, char** argv) {
  std::filesystem::path root = argc > 1 ? argv[1] : std::filesystem::current_path();
  std::ios::sync_with_stdio(false);
  mlc::support::MockBridgeServer server(root);
  return server.serve(std::cin, std::cout);
}
