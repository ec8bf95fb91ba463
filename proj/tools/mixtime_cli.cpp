// Command-line runner: estimate the mixing time of one graph (or a batch from
// a config file) and write report.json, probes.csv and ledger.csv.

#include <iostream>
#include <string>
#include <vector>

#include "mixtime/experiment.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  for (const auto& a : args) {
    if (a == "--help" || a == "-h") {
      std::cout <<
          "usage: mixtime (--graph PATH | --family NAME[:PARAMS]) [options]\n"
          "  --source N            source node (default 0)\n"
          "  --epsilon NUM/DEN     accuracy threshold (default 1/n^2)\n"
          "  --tokens K | --paper-k   token count (default ceil(80 n^8 log n))\n"
          "  --k-log-base e|2|10   log base of the default K\n"
          "  --seed N              master seed\n"
          "  --lazy                lazy walk (required for bipartite graphs)\n"
          "  --max-length N        probe length cap (default n^3 ceil(log2 n))\n"
          "  --threshold-factor F  averaging threshold per unit degree (default ceil(ln n))\n"
          "  --no-averaging        sample every token individually\n"
          "  --word-bits B         per-message bit budget including tag\n"
          "  --oracle              compare against the exact mixing time\n"
          "  --spectral            add the spectral report\n"
          "  --monotonicity T      check exact distance monotonicity up to T\n"
          "  --config FILE         JSON config; flags override it\n"
          "  --out DIR             write report.json, probes.csv, ledger.csv\n"
          "  --jobs N              parallel experiments for batch configs\n"
          "families: complete:N triangle cycle:N lollipop:C,P barbell:C hypercube:D petersen\n"
          "          erdos_renyi:N,P (P as num/den)\n"
          "exit codes: 0 ok, 2 config error, 3 validation error, 4 cap exceeded\n";
      return 0;
    }
  }
  return mixtime::run_cli(args, std::cout, std::cerr);
}
