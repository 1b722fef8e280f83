// Synthetic Task A data -> train -> test-split weighted-F1 -> one prediction.

#include <cstdio>

#include "sefusion/sefusion.hpp"

using namespace sefusion;

int main() {
  SynthConfig sc;
  sc.task = "A";
  sc.seed = 42;
  sc.text_dim = 64;
  sc.image_dim = 64;
  sc.proportions = reference_proportions("A");
  const auto ds = synth_dataset(sc);
  std::fputs(format_summary(summarize(ds)).c_str(), stdout);

  ModelConfig mc;
  mc.fusion = FusionConfig{64, 64, true};
  mc.head.output_classes = task_spec("A").class_count();
  TrainConfig tc;
  tc.epochs = 60;
  tc.batch_size = 64;
  tc.seed = 42;
  const auto tm = train<float>(ds, "A", mc, tc);
  std::printf("selected epoch %d\n", tm.history.selected_epoch.value_or(0));

  const auto test = labeled_split<float>(ds, "A", Split::test);
  const auto scores = score_split(tm.model, test);
  std::printf("test accuracy %.4f, weighted-F1 %.4f\n", scores.accuracy, scores.weighted_f1);

  Matrix<float> xt(1, 64), xi(1, 64);
  for (std::size_t j = 0; j < 64; ++j) {
    xt[j] = test.text(0, j);
    xi[j] = test.image(0, j);
  }
  const auto p = predict(tm.model, xt, xi);
  std::printf("first test record: %s (", task_spec("A").label_names[p.label].c_str());
  for (std::size_t c = 0; c < p.probabilities.size(); ++c)
    std::printf("%s%.3f", c ? " " : "", p.probabilities[c]);
  std::printf(")\n");
}
