from ionsynth.cli import main
import sys
sys.exit(main())
