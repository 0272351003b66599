"""level3inv default configuration file.

Every configuration element ever used in the program must exist here.
These defaults may be overridden in the user's config file (a Python file named level3invrc in
the XDG config directory, or one given with --config) and those in turn by command-line flags.

The variables guaranteed to be available are set in config.environ()
"""

# Dataset generation

# Number of simulated devices; each gives one curve per gate-source voltage
n_devices = 5000

# Seed from which every device, noise sample and split assignment is derived
dataset_seed = 0

# Drain-source voltage sweep, volts
vds_start = 0.1
vds_stop = 10.0
vds_step = 0.1

# Gate-source voltages of each device's curve family, volts
v_gs_list = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0]

# Replacement sampling ranges. The format is {'name': 'MIN:MAX[:LAW]'} or {'name': 'fixed'}
# where LAW is one of log, uniform, fixed and the name is one of
# L, W, R_d, R_s, V_t, KP, gamma, phi, theta.
# e.g. to hold the width and transconductance at their defaults use
# {'W': 'fixed', 'KP': 'fixed'}
parameter_ranges = {}

# Device parameter the network learns to retrieve
target_param = 'L'

# Relative standard deviation of multiplicative noise added to simulated currents
noise_rel = 0.0

# Fractions of devices placed in the train, val and test splits
split_fractions = [0.8, 0.1, 0.1]

# Whether to split by 'device' (all curves of a device together) or by 'curve'
split_granularity = 'device'

# Number of worker processes simulating devices
generate_jobs = 1

# Whether to compress the data table with zstd
compress_dataset = False

# Don't compress a data table if it's shorter than this length.
# 128 is the normal maximum length allowed for data inline in ext4 inodes, so using this
# will cause absolutely no disk space increase for such files on such filesystems.
compress_threshold_bytes = 128

# Network and training

# Widths of the hidden layers
hidden_layers = [128, 64, 32, 16]

# Activation of the hidden layers: 'relu' or 'sigmoid'
hidden_activation = 'relu'

# Spread constant k of the sigmoid activation
sigmoid_k = 1.0

learning_rate = 1e-4
batch_size = 32
epochs = 100

# Adam moment decay rates and denominator offset
adam_beta1 = 0.9
adam_beta2 = 0.999
adam_epsilon = 1e-8

# Seed for weight initialization and the shuffling of training batches
train_seed = 0

# Keep the weights of the epoch with the lowest validation MSE instead of the last epoch
select_best_val = False

# Paths

# Directory holding manifest.json and data.csv
dataset_path = '{XDG_DATA_HOME}/level3inv/dataset'

# Model checkpoint file
model_path = '{XDG_DATA_HOME}/level3inv/model.json'

# Per-epoch training report
report_path = '{XDG_DATA_HOME}/level3inv/report.csv'
